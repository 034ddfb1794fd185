"""Parametric spectrally negative Lévy models.

A model is stored as ``(premium, sigma, jumps)`` where ``premium`` is the
linear coefficient ``c = gamma + int_0^1 z nu(dz)`` of the Laplace exponent
written with the truncation absorbed:

    psi(lam) = c*lam + sigma**2 * lam**2 / 2 - eta * (1 - Lhat(lam))

with ``Lhat`` the Laplace transform of the claim-size law. Jump laws are
finite mixtures of Erlang distributions; shape 1 everywhere gives the
hyperexponential (completely monotone) case.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
from numpy.polynomial import Polynomial

__all__ = [
    "ModelError",
    "PoleError",
    "JumpMeasure",
    "LevyModel",
    "RefractionParams",
    "Variation",
    "Classification",
    "laplace_exponent",
    "laplace_exponent_deriv",
    "right_inverse",
    "classify",
    "model_from_dict",
    "model_to_dict",
]


class ModelError(ValueError):
    """Invalid model or parameter combination."""


class PoleError(ArithmeticError):
    """Laplace exponent evaluated at (or left of) a pole of its rational form."""


@dataclass(frozen=True)
class JumpMeasure:
    """Finite Lévy measure ``eta * sum_k a_k Erlang(m_k, alpha_k)``.

    Use :meth:`hyperexp` or :meth:`erlang_mixture` to construct.
    """

    rate: float
    weights: tuple[float, ...]
    alphas: tuple[float, ...]
    shapes: tuple[int, ...]

    def __post_init__(self):
        n = len(self.weights)
        if n == 0 or len(self.alphas) != n or len(self.shapes) != n:
            raise ModelError("jump components must be non-empty and of equal length")
        if not self.rate > 0:
            raise ModelError(f"jump rate must be > 0, got {self.rate}")
        if any(not w > 0 for w in self.weights):
            raise ModelError("jump weights must be > 0")
        if any(not a > 0 for a in self.alphas):
            raise ModelError("jump alphas must be > 0")
        if any(int(m) != m or m < 1 for m in self.shapes):
            raise ModelError("Erlang shapes must be integers >= 1")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ModelError(f"jump weights must sum to 1, got {sum(self.weights)!r}")

    @classmethod
    def hyperexp(cls, rate: float, weights: Sequence[float], alphas: Sequence[float]) -> "JumpMeasure":
        return cls(float(rate), tuple(map(float, weights)), tuple(map(float, alphas)), (1,) * len(weights))

    @classmethod
    def erlang_mixture(cls, rate: float, weights: Sequence[float], shapes: Sequence[int],
                       alphas: Sequence[float]) -> "JumpMeasure":
        return cls(float(rate), tuple(map(float, weights)), tuple(map(float, alphas)), tuple(int(m) for m in shapes))

    @property
    def kind(self) -> str:
        return "hyperexp" if self.completely_monotone else "erlang_mixture"

    @property
    def completely_monotone(self) -> bool:
        return all(m == 1 for m in self.shapes)

    @property
    def mean(self) -> float:
        """Mean claim size."""
        return sum(a * m / al for a, m, al in zip(self.weights, self.shapes, self.alphas))

    @property
    def min_alpha(self) -> float:
        return min(self.alphas)

    def density(self, z):
        """Lévy density ``nu(dz)/dz`` (includes the total rate)."""
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        for a, m, al in zip(self.weights, self.shapes, self.alphas):
            out += a * al**m * z ** (m - 1) * np.exp(-al * z) / math.factorial(m - 1)
        return self.rate * out

    def transform(self, lam, order: int = 0):
        """``d^order/dlam^order`` of the claim-size Laplace transform ``E[exp(-lam Z)]``."""
        out = 0.0
        for a, m, al in zip(self.weights, self.shapes, self.alphas):
            # d^k/dlam^k (al/(al+lam))^m = (-1)^k m(m+1)..(m+k-1) al^m (al+lam)^-(m+k)
            coef = float(np.prod(np.arange(m, m + order))) * (-1) ** order
            out = out + a * coef * al**m / (al + lam) ** (m + order)
        return out

    def rational_parts(self) -> tuple[Polynomial, Polynomial]:
        """Return ``(num, den)`` with ``Lhat(lam) = num(lam) / den(lam)``.

        Components sharing an ``alpha`` share denominator factors.
        """
        top: dict[float, int] = {}
        for m, al in zip(self.shapes, self.alphas):
            top[al] = max(top.get(al, 0), m)
        den = Polynomial([1.0])
        for al, m in top.items():
            den = den * Polynomial([al, 1.0]) ** m
        num = Polynomial([0.0])
        for a, m, al in zip(self.weights, self.shapes, self.alphas):
            rest = Polynomial([1.0])
            for al2, m2 in top.items():
                rest = rest * Polynomial([al2, 1.0]) ** (m2 - (m if al2 == al else 0))
            num = num + a * al**m * rest
        return num, den


@dataclass(frozen=True)
class LevyModel:
    """Spectrally negative Lévy process with parametric (finite) jumps.

    ``premium`` is ``c``; the triplet drift ``gamma`` is derived from it.
    """

    premium: float
    sigma: float = 0.0
    jumps: JumpMeasure | None = None

    def __post_init__(self):
        if not math.isfinite(self.premium):
            raise ModelError("premium must be finite")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ModelError(f"sigma must be >= 0, got {self.sigma}")
        if self.sigma == 0:
            if self.jumps is None:
                raise ModelError("sigma = 0 without jumps gives a deterministic drift")
            if not self.premium > 0:
                raise ModelError("bounded variation model needs premium c > 0 (monotone paths excluded)")

    @property
    def c(self) -> float:
        return self.premium

    @property
    def gamma(self) -> float:
        """Drift of the Lévy triplet, ``c - int_0^1 z nu(dz)``."""
        if self.jumps is None:
            return self.premium
        from scipy.integrate import quad

        small, _ = quad(lambda z: z * float(self.jumps.density(z)), 0.0, 1.0, epsabs=1e-14, epsrel=1e-13)
        return self.premium - small

    @property
    def jump_rate(self) -> float:
        return 0.0 if self.jumps is None else self.jumps.rate

    @property
    def bounded_variation(self) -> bool:
        return self.sigma == 0

    @property
    def completely_monotone(self) -> bool:
        return self.jumps is None or self.jumps.completely_monotone

    @property
    def mean(self) -> float:
        """``E[X_1] = psi'(0+)``."""
        return self.premium - (0.0 if self.jumps is None else self.jumps.rate * self.jumps.mean)

    @property
    def pole(self) -> float:
        """Largest real singularity of psi (``-inf`` when there are no jumps)."""
        return -math.inf if self.jumps is None else -self.jumps.min_alpha

    def psi(self, lam):
        """Laplace exponent; accepts complex or array arguments, no domain checks."""
        out = self.premium * lam + 0.5 * self.sigma**2 * lam * lam
        if self.jumps is not None:
            out = out - self.jumps.rate * (1.0 - self.jumps.transform(lam))
        return out

    def dpsi(self, lam, order: int = 1):
        if order == 1:
            out = self.premium + self.sigma**2 * lam
        elif order == 2:
            out = self.sigma**2 + 0.0 * lam
        else:
            raise ValueError("order must be 1 or 2")
        if self.jumps is not None:
            out = out + self.jumps.rate * self.jumps.transform(lam, order)
        return out

    def characteristic_polynomial(self, q: float, shift: float = 0.0) -> Polynomial:
        """Polynomial whose roots are the solutions of ``psi(t) - shift*t - q = 0``.

        Obtained by multiplying through by the denominator of ``Lhat``.
        """
        base = Polynomial([-q, self.premium - shift, 0.5 * self.sigma**2])
        if self.jumps is None:
            return base.trim()
        num, den = self.jumps.rational_parts()
        eta = self.jumps.rate
        return (base - eta) * den + eta * num


@dataclass(frozen=True)
class RefractionParams:
    """Ceiling dividend rate ``delta`` and discount rate ``q``."""

    delta: float
    q: float

    def __post_init__(self):
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ModelError(f"delta must be > 0, got {self.delta}")
        if not (self.q > 0 and math.isfinite(self.q)):
            raise ModelError(f"q must be > 0 (discounting at a positive rate), got {self.q}")

    def check(self, model: LevyModel) -> None:
        """Enforce assumption (H): ``delta < c`` for bounded variation."""
        if model.bounded_variation and not self.delta < model.premium:
            raise ModelError(
                f"assumption (H) violated: delta={self.delta} must be < premium c={model.premium} "
                "for a bounded variation model"
            )


class Variation(enum.Enum):
    BOUNDED = "BoundedVariation"
    UNBOUNDED = "UnboundedVariation"


@dataclass(frozen=True)
class Classification:
    variation: Variation
    c: float
    jump_mass: float


def _check_lambda(model: LevyModel, lam: float) -> None:
    if lam < 0:
        raise ModelError(f"lambda must be >= 0, got {lam}")


def laplace_exponent(model: LevyModel, lam: float) -> float:
    _check_lambda(model, lam)
    return float(model.psi(lam))


def laplace_exponent_deriv(model: LevyModel, lam: float, order: int = 1) -> float:
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if not lam > model.pole:
        raise PoleError(f"lambda={lam} is not right of the pole at {model.pole}")
    return float(model.dpsi(lam, order))


def right_inverse(model: LevyModel, q: float, delta_shift: float = 0.0) -> float:
    """Largest root of ``psi(lam) - delta_shift*lam = q``.

    Doubling bracket followed by Newton, with bisection whenever Newton leaves
    the bracket. Convexity makes this globally convergent.
    """
    if not q > 0:
        raise ModelError(f"q must be > 0, got {q}")
    if delta_shift > 0:
        RefractionParams(delta_shift, q).check(model)

    def f(lam):
        return model.psi(lam) - delta_shift * lam - q

    def df(lam):
        return model.dpsi(lam, 1) - delta_shift

    lo, hi = 0.0, max(1.0, q / max(model.premium - delta_shift, 1e-300) if model.sigma == 0 else 1.0)
    while f(hi) <= 0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise ArithmeticError("failed to bracket right inverse")
    tol = 1e-12 * max(1.0, q)
    # started from the right of the root, Newton decreases monotonically
    x = hi
    for _ in range(200):
        fx = f(x)
        if fx > 0:
            hi = x
        else:
            lo = x
        if abs(fx) < tol or hi - lo <= 4 * np.finfo(float).eps * hi:
            break
        d = df(x)
        nxt = x - fx / d if d > 0 else math.nan
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if nxt == x:
            break
        x = nxt
    return float(x)


def classify(model: LevyModel) -> Classification:
    var = Variation.BOUNDED if model.bounded_variation else Variation.UNBOUNDED
    return Classification(var, model.premium, model.jump_rate)


def model_from_dict(doc: Mapping[str, Any]) -> LevyModel:
    """Build a model from the JSON config schema.

    ``{"sigma": .., "premium": .., "jumps": {"type": "hyperexp"|"erlang_mixture",
    "rate": .., "components": [{"weight": .., "alpha": .., "shape": ..}]}}``
    """
    if not isinstance(doc, Mapping):
        raise ModelError("model config must be a JSON object")
    for key in ("premium",):
        if key not in doc:
            raise ModelError(f"missing field '{key}'")
    try:
        premium = float(doc["premium"])
    except (TypeError, ValueError):
        raise ModelError("field 'premium' must be a number") from None
    try:
        sigma = float(doc.get("sigma", 0.0))
    except (TypeError, ValueError):
        raise ModelError("field 'sigma' must be a number") from None
    jumps_doc = doc.get("jumps")
    jumps = None
    if jumps_doc is not None:
        if not isinstance(jumps_doc, Mapping):
            raise ModelError("field 'jumps' must be an object")
        kind = jumps_doc.get("type")
        if kind not in ("hyperexp", "erlang_mixture"):
            raise ModelError(f"field 'jumps.type' must be 'hyperexp' or 'erlang_mixture', got {kind!r}")
        if "rate" not in jumps_doc:
            raise ModelError("missing field 'jumps.rate'")
        comps = jumps_doc.get("components")
        if not isinstance(comps, list) or not comps:
            raise ModelError("field 'jumps.components' must be a non-empty list")
        weights, alphas, shapes = [], [], []
        for i, comp in enumerate(comps):
            for key in ("weight", "alpha"):
                if not isinstance(comp, Mapping) or key not in comp:
                    raise ModelError(f"missing field 'jumps.components[{i}].{key}'")
            weights.append(float(comp["weight"]))
            alphas.append(float(comp["alpha"]))
            shape = comp.get("shape", 1)
            if kind == "hyperexp" and shape != 1:
                raise ModelError(f"field 'jumps.components[{i}].shape' must be 1 for hyperexp")
            if not isinstance(shape, int) or isinstance(shape, bool):
                raise ModelError(f"field 'jumps.components[{i}].shape' must be an integer")
            shapes.append(shape)
        jumps = JumpMeasure(float(jumps_doc["rate"]), tuple(weights), tuple(alphas), tuple(shapes))
    return LevyModel(premium, sigma, jumps)


def model_to_dict(model: LevyModel) -> dict:
    doc: dict[str, Any] = {"sigma": model.sigma, "premium": model.premium, "jumps": None}
    if model.jumps is not None:
        j = model.jumps
        doc["jumps"] = {
            "type": j.kind,
            "rate": j.rate,
            "components": [
                {"weight": a, "alpha": al, "shape": m} for a, al, m in zip(j.weights, j.alphas, j.shapes)
            ],
        }
    return doc
