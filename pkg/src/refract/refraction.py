"""Value of refraction strategies, the optimal threshold and the slope test.

Notation: ``W`` is the q-scale function of X, ``WW`` that of Y = X - delta*t,
``phi`` and ``Phi`` the right inverses of the Laplace exponents of Y and X.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar

from .levy import LevyModel, ModelError, RefractionParams
from .scale import (
    ExponentialSumScale,
    NumericScale,
    a_star as _a_star,
    build_scale,
    build_scale_numeric,
)

__all__ = [
    "Case",
    "Criterion",
    "ThresholdSolution",
    "RefractionProblem",
    "ValueFunction",
    "HJBReport",
    "IntegrationError",
    "ConsistencyError",
    "NonUniqueThresholdWarning",
    "h",
    "h_prime",
    "b_star",
    "value",
    "value_prime",
    "hjb_verify",
    "convolution_identity_residual",
]

CROSS_ROOT_GAP = 1e-6


class IntegrationError(ArithmeticError):
    pass


class ConsistencyError(ArithmeticError):
    """Bracketing of h = W' failed; points at a defective scale function."""


class NonUniqueThresholdWarning(UserWarning):
    pass


class Case(enum.Enum):
    INTERIOR_POSITIVE = "InteriorPositive"
    ZERO_I = "Zero_case_i"
    ZERO_II = "Zero_case_ii"


class Criterion(enum.Enum):
    """Which condition makes the threshold positive.

    ``III`` (sigma = 0 with infinite jump activity) cannot occur with the
    finite parametric jump families but is kept for completeness.
    """

    I = "i"
    II = "ii"
    III = "iii"


@dataclass(frozen=True, eq=False)
class RefractionProblem:
    model: LevyModel
    params: RefractionParams
    W: ExponentialSumScale | NumericScale
    WW: ExponentialSumScale | NumericScale

    @classmethod
    def build(cls, model: LevyModel, delta: float, q: float, numeric: bool = False,
              tol: float = 1e-8) -> "RefractionProblem":
        params = RefractionParams(float(delta), float(q))
        params.check(model)
        if numeric:
            W = build_scale_numeric(model, q, 0.0, tol=tol)
            WW = build_scale_numeric(model, q, delta, tol=tol)
        else:
            W = build_scale(model, q, 0.0)
            WW = build_scale(model, q, delta)
        prob = cls(model, params, W, WW)
        if not prob.phi > prob.Phi:
            raise ConsistencyError(f"phi(q)={prob.phi} must exceed Phi(q)={prob.Phi}")
        return prob

    @property
    def delta(self) -> float:
        return self.params.delta

    @property
    def q(self) -> float:
        return self.params.q

    @property
    def phi(self) -> float:
        return self.WW.lead_root

    @property
    def Phi(self) -> float:
        return self.W.lead_root

    @property
    def exact(self) -> bool:
        return isinstance(self.W, ExponentialSumScale) and isinstance(self.WW, ExponentialSumScale)

    def h(self, b):
        return h(self, b)

    def h_prime(self, b):
        return h_prime(self, b)

    def b_star(self) -> "ThresholdSolution":
        return b_star(self)

    def value_function(self, b: float) -> "ValueFunction":
        return ValueFunction(self, float(b))


def h(problem: RefractionProblem, b):
    """``phi * exp(phi b) * int_b^inf exp(-phi y) W'(y) dy``."""
    b = np.asarray(b, dtype=float)
    if np.any(b < 0):
        raise ModelError("h is defined for b >= 0")
    phi = problem.phi
    W = problem.W
    if isinstance(W, ExponentialSumScale):
        coef = W.weights * W.roots / (phi - W.roots)
        t = coef * np.exp(np.multiply.outer(b, W.roots))
        out = phi * t.sum(axis=-1).real
        return out if out.ndim else float(out)
    vals = np.array([_h_quad(problem, float(bb)) for bb in b.reshape(-1)]).reshape(b.shape)
    return vals if vals.ndim else float(vals)


def _h_quad(problem, b, epsrel=1e-10):
    phi, W = problem.phi, problem.W
    # integrand decays like exp(-(phi - Phi) u)
    rate = phi - problem.Phi
    upper = 60.0 / rate
    val, err = quad(lambda u: math.exp(-phi * u) * W.eval(u + b, 1), 0.0, upper,
                    epsabs=0.0, epsrel=epsrel, limit=400)
    if not np.isfinite(val) or err > 1e3 * epsrel * abs(val):
        raise IntegrationError(f"h({b}) quadrature failed to converge (error estimate {err:.2e})")
    return phi * val


def h_prime(problem: RefractionProblem, b):
    return problem.phi * (h(problem, b) - problem.W.eval(b, 1))


@dataclass(frozen=True)
class ThresholdSolution:
    b_star: float
    h_at_bstar: float
    case: Case
    a_star: float
    criterion: Criterion | None = None
    unique: bool = True
    warning: str | None = None

    def as_dict(self) -> dict:
        return {
            "b_star": self.b_star,
            "case": self.case.value,
            "a_star": self.a_star,
            "h_at_bstar": self.h_at_bstar,
            "criterion": None if self.criterion is None else self.criterion.value,
            "unique": self.unique,
            "warning": self.warning,
        }


def positivity_criterion(problem: RefractionProblem) -> Criterion | None:
    """Closed-form test for ``b* > 0``; ``None`` when the threshold is zero."""
    m, d, q, phi = problem.model, problem.delta, problem.q, problem.phi
    if m.sigma > 0:
        return Criterion.I if phi < 2 * d / m.sigma**2 else None
    c, eta = m.premium, m.jump_rate
    if math.isinf(eta):
        return Criterion.III
    return Criterion.II if phi < d * (eta + q) / (c * (c - d)) else None


def b_star(problem: RefractionProblem) -> ThresholdSolution:
    """Optimal refraction threshold: the largest minimiser of ``h``.

    With a completely monotone jump density the minimiser is unique and
    solves ``h(b) = W'(b)`` on ``(0, a*)``. Otherwise ``h`` is scanned on a
    grid and the largest minimiser is returned with a warning.
    """
    astar = _a_star(problem.W)
    crit = positivity_criterion(problem)
    zero_case = Case.ZERO_I if problem.model.sigma > 0 else Case.ZERO_II
    if not problem.model.completely_monotone:
        return _b_star_scan(problem, astar, crit, zero_case)
    if crit is None:
        return ThresholdSolution(0.0, float(h(problem, 0.0)), zero_case, astar, None)
    g = lambda b: h(problem, b) - problem.W.eval(b, 1)
    lo, hi = 0.0, astar
    if not (g(lo) < 0 < g(hi)):
        raise ConsistencyError(
            f"h - W' does not change sign on [0, a*={astar}]: g(0)={g(lo)}, g(a*)={g(hi)}"
        )
    bs = brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    return ThresholdSolution(float(bs), float(h(problem, bs)), Case.INTERIOR_POSITIVE, astar, crit)


def _b_star_scan(problem, astar, crit, zero_case, n=4001):
    upper = max(10.0 * astar, 20.0 / max(problem.Phi, 1e-3))
    bs = np.linspace(0.0, upper, n)
    hv = h(problem, bs)
    hmin = hv.min()
    ties = np.flatnonzero(hv <= hmin + 1e-12 * abs(hmin))
    k = int(ties[-1])
    best = bs[k]
    if 0 < k < n - 1:
        res = minimize_scalar(lambda b: h(problem, b), bounds=(bs[k - 1], bs[k + 1]), method="bounded",
                              options={"xatol": 1e-12})
        if res.fun <= hv[k]:
            best = float(res.x)
    msg = "jump density is not completely monotone: minimiser of h may not be unique"
    warnings.warn(msg, NonUniqueThresholdWarning, stacklevel=3)
    case = Case.INTERIOR_POSITIVE if best > 0 else zero_case
    return ThresholdSolution(float(best), float(h(problem, best)), case, astar, crit, unique=False,
                             warning=msg)


@dataclass(frozen=True, eq=False)
class ValueFunction:
    """Expected discounted dividends ``v_b`` of the refraction strategy at level ``b``."""

    problem: RefractionProblem
    b: float
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.b >= 0:
            raise ModelError("threshold b must be >= 0")

    @property
    def hb(self) -> float:
        if "hb" not in self._cache:
            self._cache["hb"] = float(h(self.problem, self.b))
        return self._cache["hb"]

    @property
    def closed_form(self) -> bool:
        p = self.problem
        if not p.exact:
            return False
        gap = np.min(np.abs(p.W.roots[:, None] - p.WW.roots[None, :]))
        return bool(gap >= CROSS_ROOT_GAP)

    def _coefficients(self):
        """Coefficients of ``v(x) = delta/q + sum_j K_j e^{rho_j (x-b)}`` above b.

        The leading-root coefficient of Y cancels exactly against h(b) and is
        set to zero; keeping it would multiply rounding noise by exp(phi*(x-b)).
        Terms in exp(theta_i x) drop out as well: partial fractions of WW give
        ``sum_j E_j/(theta_i - rho_j) = -1/(delta theta_i)`` at every root of X.
        """
        if "coef" in self._cache:
            return self._cache["coef"]
        p, d, b = self.problem, self.problem.delta, self.b
        W, WW = p.W, p.WW
        th, D = W.roots, W.weights
        rho, E = WW.roots, WW.weights
        if b == 0:
            K = -d * E * (1.0 / rho - 1.0 / p.phi)
        else:
            cross = th[:, None] - rho[None, :]
            S = np.sum((D * th * np.exp(th * b))[:, None] / cross, axis=0)
            K = -d * E / rho - d * E * S / self.hb
        K = K.copy()
        K[WW.lead] = 0.0
        self._cache["coef"] = (d / p.q, K)
        return self._cache["coef"]

    def _tail_roots(self):
        # the leading root carries a zero coefficient; drop its exponential
        r = self.problem.WW.roots.copy()
        r[self.problem.WW.lead] = 0.0
        return r

    def __call__(self, x):
        return self.value(x)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0):
            raise ModelError("value function is evaluated for x >= 0")
        if not self.closed_form:
            return _vectorize(self.value_quad, x)
        W = self.problem.W
        below = W.eval(np.minimum(x, self.b)) / self.hb
        const, K = self._coefficients()
        z = np.maximum(x - self.b, 0.0)
        above = const + (K * np.exp(np.multiply.outer(z, self._tail_roots()))).sum(axis=-1)
        out = np.where(x <= self.b, below, above.real)
        return out if out.ndim else float(out)

    def value_prime(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise ModelError("value_prime is evaluated for x > 0")
        if not self.closed_form:
            return _vectorize(self.value_prime_quad, x)
        W, WW = self.problem.W, self.problem.WW
        below = W.eval(np.minimum(x, self.b), 1) / self.hb
        _, K = self._coefficients()
        z = np.maximum(x - self.b, 0.0)
        above = (K * WW.roots * np.exp(np.multiply.outer(z, self._tail_roots()))).sum(axis=-1)
        out = np.where(x <= self.b, below, above.real)
        return out if out.ndim else float(out)

    def value_quad(self, x: float, epsrel: float = 1e-11) -> float:
        """Direct quadrature of the integral representation (no closed forms)."""
        p, d, b = self.problem, self.problem.delta, self.b
        W, WW = p.W, p.WW
        if x <= b:
            return float(W.eval(x)) / self.hb
        prim = _quad(lambda y: WW.eval(y), 0.0, x - b, epsrel)
        conv = _quad(lambda y: WW.eval(x - y) * W.eval(y, 1), b, x, epsrel, _hint(p, x, b))
        return -d * prim + (float(W.eval(x)) + d * conv) / self.hb

    def value_prime_quad(self, x: float, epsrel: float = 1e-11) -> float:
        p, d, b = self.problem, self.problem.delta, self.b
        W, WW = p.W, p.WW
        if x <= b:
            return float(W.eval(x, 1)) / self.hb
        conv = _quad(lambda y: WW.eval(x - y, 1) * W.eval(y, 1), b, x, epsrel, _hint(p, x, b))
        return -d * float(WW.eval(x - b)) + ((1 + d * WW.W0) * float(W.eval(x, 1)) + d * conv) / self.hb


def _hint(p, x, lo):
    # mass of WW(x - y) concentrates within a few 1/phi of y = x
    pts = [x - k / p.phi for k in (1, 3, 10, 30) if x - k / p.phi > lo]
    return pts or None


def _quad(f, a, b, epsrel, points=None):
    if b <= a:
        return 0.0
    val, err = quad(f, a, b, epsabs=0.0, epsrel=epsrel, limit=500, points=points)
    return val


def _vectorize(f, x):
    out = np.array([f(float(v)) for v in np.ravel(x)]).reshape(np.shape(x))
    return out if out.ndim else float(out)


def value(vf: ValueFunction, x):
    return vf.value(x)


def value_prime(vf: ValueFunction, x):
    return vf.value_prime(x)


@dataclass(frozen=True)
class HJBReport:
    holds: bool
    worst_violation: float
    location: float
    b: float
    x_max: float
    zero_threshold_criterion: bool | None = None
    v0_decreasing: bool | None = None

    def as_dict(self) -> dict:
        return {
            "holds": self.holds,
            "worst_violation": self.worst_violation,
            "location": self.location,
            "b": self.b,
            "x_max": self.x_max,
            "zero_threshold_criterion": self.zero_threshold_criterion,
            "v0_decreasing": self.v0_decreasing,
        }


def hjb_verify(vf: ValueFunction, x_max: float | None = None, grid_n: int = 2000,
               rtol: float = 1e-7, atol: float = 1e-9) -> HJBReport:
    """Check ``v' >= 1`` on ``(0, b]`` and ``v' <= 1`` on ``(b, x_max]``.

    Violations are reported, never raised. ``worst_violation`` is the largest
    signed excess over the slope bound (negative means slack everywhere).
    """
    if grid_n < 100:
        raise ValueError("grid_n must be >= 100")
    p, b = vf.problem, vf.b
    if x_max is None:
        x_max = b + 10.0 / p.Phi
    if not x_max > b:
        raise ValueError("x_max must exceed the threshold")
    xs = np.linspace(x_max / grid_n, x_max, grid_n)
    if b > 0:
        xs = np.union1d(xs, [b])
    tol = max(rtol, atol)

    def excess(x):
        d = vf.value_prime(x)
        return np.where(x <= b, 1.0 - d, d - 1.0)

    ex = excess(xs)
    k = int(np.argmax(ex))
    worst, loc = float(ex[k]), float(xs[k])
    # refine the location inside the neighbouring cells (same side of b)
    lo, hi = xs[max(k - 1, 0)], xs[min(k + 1, len(xs) - 1)]
    if b > 0 and lo < b < hi:
        lo, hi = (lo, b) if loc <= b else (math.nextafter(b, math.inf), hi)
    if hi > lo:
        res = minimize_scalar(lambda x: -float(excess(np.array(x))), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10})
        if -res.fun > worst:
            worst, loc = float(-res.fun), float(res.x)

    crit = dec = None
    if b == 0:
        WW = p.WW
        crit = bool(p.delta * WW.W1_0 / (1 + p.delta * WW.W0) <= p.phi * (1 + 1e-12))
        d1 = vf.value_prime(xs)
        dec = bool(np.all(np.diff(d1) <= atol))
    return HJBReport(worst <= tol, worst, loc, b, float(x_max), crit, dec)


def convolution_identity_residual(problem: RefractionProblem, x: float) -> float:
    """Relative residual of the convolution identity linking ``W`` and ``WW``."""
    return _conv_residual(problem.W, problem.WW, problem.delta, float(x))


def _tilted(S, x, order, rate):
    """``exp(-rate*x) * S^(order)(x)`` without forming the overflowing factor."""
    if isinstance(S, ExponentialSumScale):
        t = S.weights * S.roots**order * np.exp(np.multiply.outer(x, S.roots - rate))
        return float(t.sum(axis=-1).real)
    return float(S.eval(x, order)) * math.exp(-rate * x)


def _conv_residual(W, WW, delta, x, epsrel=1e-12):
    if not x > 0:
        raise ModelError("x must be > 0")
    # every term carries a factor exp(phi*x); divide it out
    phi = WW.lead_root
    pts = [x - k / phi for k in (0.5, 2, 8, 32) if x - k / phi > 0] or None
    conv = _quad(lambda u: _tilted(WW, u, 1, phi) * _tilted(W, x - u, 1, phi), 0.0, x, epsrel, pts)
    lhs = delta * conv
    t1 = (1 - delta * W.W0) * _tilted(WW, x, 1, phi)
    t2 = (1 + delta * WW.W0) * _tilted(W, x, 1, phi)
    scale = max(abs(lhs), abs(t1), abs(t2))
    return abs(lhs - t1 + t2) / scale
