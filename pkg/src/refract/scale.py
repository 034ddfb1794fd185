"""q-scale functions of X and of the perturbed process Y = X - delta*t.

For rational jump transforms the scale function is an exponential sum

    W(x) = sum_i D_i exp(theta_i x),   D_i = 1 / (psi'(theta_i) - shift)

over the roots of ``psi(theta) - shift*theta - q``. :class:`NumericScale` is a
fallback that inverts ``1/(psi - shift*theta - q)`` numerically.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, TextIO

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .inversion import euler_invert
from .levy import LevyModel, ModelError, RefractionParams, right_inverse

__all__ = [
    "MultipleRootError",
    "ScaleConstructionError",
    "InversionError",
    "ExponentialSumScale",
    "NumericScale",
    "CMDecomposition",
    "build_scale",
    "build_scale_numeric",
    "a_star",
    "cm_decompose",
    "laplace_residual",
    "initial_values",
    "dump_scale_csv",
]


class ScaleConstructionError(ArithmeticError):
    pass


class MultipleRootError(ScaleConstructionError):
    """Roots too close for the partial-fraction form; use :func:`build_scale_numeric`."""


class InversionError(ArithmeticError):
    def __init__(self, msg, achieved):
        super().__init__(f"{msg} (achieved residual {achieved:.3e})")
        self.achieved = achieved


def initial_values(model: LevyModel, q: float, shift: float = 0.0) -> tuple[float, float]:
    """``(W(0+), W'(0+))`` for the scale function of ``X - shift*t``."""
    if model.sigma > 0:
        return 0.0, 2.0 / model.sigma**2
    c = model.premium - shift
    return 1.0 / c, (model.jump_rate + q) / c**2


def _check_order(x, order):
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    if order > 0 and np.any(x < 0):
        raise ModelError("derivatives of the scale function need x >= 0")


class _ScaleBase:
    model: LevyModel
    q: float
    shift: float
    lead_root: float

    def __call__(self, x, order: int = 0):
        return self.eval(x, order)

    @property
    def W0(self) -> float:
        return initial_values(self.model, self.q, self.shift)[0]

    @property
    def W1_0(self) -> float:
        return initial_values(self.model, self.q, self.shift)[1]


@dataclass(frozen=True, eq=False)
class ExponentialSumScale(_ScaleBase):
    """``W(x) = sum_i weights[i] * exp(roots[i] * x)`` for ``x >= 0``."""

    model: LevyModel
    q: float
    shift: float
    roots: np.ndarray
    weights: np.ndarray
    lead: int

    @property
    def n(self) -> int:
        return len(self.roots)

    @property
    def lead_root(self) -> float:
        return float(self.roots[self.lead].real)

    def terms(self, x, order: int = 0, skip_lead: bool = False):
        """Per-root terms scaled by ``exp(-lead_root*x)``, shape ``x.shape + (n,)``."""
        x = np.asarray(x, dtype=float)
        coef = self.weights * self.roots**order
        if skip_lead:
            coef = coef.copy()
            coef[self.lead] = 0.0
        return coef * np.exp(np.multiply.outer(x, self.roots - self.lead_root))

    def eval(self, x, order: int = 0):
        """``W^(order)(x)``; order 0 vanishes for ``x < 0``, ``x = 0`` means ``0+``."""
        x = np.asarray(x, dtype=float)
        _check_order(x, order)
        t = self.terms(np.maximum(x, 0.0), order)
        inner = t.sum(axis=-1)
        _assert_real(inner, np.abs(t).sum(axis=-1))
        out = np.exp(self.lead_root * np.maximum(x, 0.0)) * inner.real
        if order == 0:
            out = np.where(x < 0, 0.0, out)
        return out if out.ndim else float(out)

    def tilted(self, x):
        """``exp(-lead_root*x) W(x)``, bounded by ``weights[lead]``."""
        x = np.asarray(x, dtype=float)
        out = self.terms(np.maximum(x, 0.0)).sum(axis=-1).real
        out = np.where(x < 0, 0.0, out)
        return out if out.ndim else float(out)

    def transform(self, theta):
        """Analytic Laplace transform ``sum_i D_i / (theta - theta_i)``."""
        return np.sum(self.weights / (np.asarray(theta, dtype=complex)[..., None] - self.roots), axis=-1)


def _assert_real(inner, scale):
    bad = np.abs(inner.imag) > 1e-9 * scale + 1e-300
    if np.any(bad):
        raise ScaleConstructionError("scale function evaluation has a non-negligible imaginary part")


def _polish(model, q, shift, z):
    for _ in range(50):
        f = model.psi(z) - shift * z - q
        d = model.dpsi(z, 1) - shift
        step = f / d
        z = z - step
        if abs(step) <= 1e-15 * max(abs(z), 1.0):
            break
    return z


def build_scale(model: LevyModel, q: float, delta_shift: float = 0.0) -> ExponentialSumScale:
    """Partial-fraction scale function of ``X - delta_shift*t`` at rate ``q``."""
    if not q > 0:
        raise ModelError(f"q must be > 0, got {q}")
    if delta_shift > 0:
        RefractionParams(delta_shift, q).check(model)
    poly = model.characteristic_polynomial(q, delta_shift).trim()
    degree = poly.degree()
    expected = (2 if model.sigma > 0 else 1) + (0 if model.jumps is None else _den_degree(model))
    if degree != expected:
        raise ScaleConstructionError(f"characteristic polynomial has degree {degree}, expected {expected}")
    raw = poly.roots().astype(complex)
    if len(raw) != expected:
        raise ScaleConstructionError(f"found {len(raw)} roots, expected {expected}")
    roots = np.array([_polish(model, q, delta_shift, z) for z in raw])

    lead_value = right_inverse(model, q, delta_shift)
    lead = int(np.argmax(roots.real))
    if abs(roots[lead] - lead_value) > 1e-8 * max(1.0, lead_value):
        raise ScaleConstructionError(
            f"largest root {roots[lead]} disagrees with right inverse {lead_value}"
        )
    roots[lead] = lead_value
    roots = _symmetrize(roots)
    lead = int(np.argmax(roots.real))

    span = np.max(np.abs(roots))
    gaps = np.abs(roots[:, None] - roots[None, :])
    np.fill_diagonal(gaps, np.inf)
    if np.min(gaps) < 1e-8 * span:
        raise MultipleRootError(
            f"near-multiple roots (min gap {np.min(gaps):.3e}); use build_scale_numeric instead"
        )
    weights = 1.0 / (model.dpsi(roots, 1) - delta_shift)
    return ExponentialSumScale(model, float(q), float(delta_shift), roots, weights, lead)


def _den_degree(model):
    top: dict[float, int] = {}
    for m, al in zip(model.jumps.shapes, model.jumps.alphas):
        top[al] = max(top.get(al, 0), m)
    return sum(top.values())


def _symmetrize(roots):
    """Snap nearly-real roots to the real axis and pair complex roots as exact conjugates."""
    roots = roots.copy()
    real = np.abs(roots.imag) <= 1e-10 * np.maximum(np.abs(roots), 1.0)
    roots[real] = roots[real].real
    upper = [i for i in range(len(roots)) if not real[i] and roots[i].imag > 0]
    lower = [i for i in range(len(roots)) if not real[i] and roots[i].imag < 0]
    if len(upper) != len(lower):
        raise ScaleConstructionError("complex roots do not come in conjugate pairs")
    for i in upper:
        j = min(lower, key=lambda k: abs(roots[k] - np.conj(roots[i])))
        lower.remove(j)
        roots[j] = np.conj(roots[i])
    return roots


@dataclass(frozen=True, eq=False)
class NumericScale(_ScaleBase):
    """Scale function by numerical Laplace inversion of the tilted transform."""

    model: LevyModel
    q: float
    shift: float
    lead_root: float
    grid: np.ndarray
    values: np.ndarray
    tol: float
    achieved: float
    euler: tuple = (18.4, 15, 11)

    def _tilted_transform(self, lam):
        z = lam + self.lead_root
        return 1.0 / (self.model.psi(z) - self.shift * z - self.q)

    def eval(self, x, order: int = 0):
        x = np.asarray(x, dtype=float)
        _check_order(x, order)
        flat = x.reshape(-1)
        out = np.zeros_like(flat)
        pos = flat > 0
        if np.any(pos):
            out[pos] = _tilted_derivs(self, flat[pos], order, self.euler)
        zero = flat == 0
        if np.any(zero):
            out[zero] = (self.W0, self.W1_0, np.nan)[order]
        out = out.reshape(x.shape)
        return out if out.ndim else float(out)

    def transform(self, theta):
        """``int exp(-theta x) W(x) dx`` by quadrature (``theta > lead_root``)."""
        beta = float(theta) - self.lead_root
        g = lambda x: math.exp(-beta * x) * self._tilted0_raw(x)
        val, _ = quad(g, 0.0, np.inf, epsabs=1e-14, epsrel=1e-11, limit=400)
        return val

    def _tilted0_raw(self, x):
        if x == 0:
            return self.W0
        return float(_tilted_derivs(self, np.array([x]), 0, self.euler, tilted_only=True)[0])

    def tilted(self, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        out = np.where(flat == 0, self.W0, 0.0)
        pos = flat > 0
        if np.any(pos):
            out[pos] = _tilted_derivs(self, flat[pos], 0, self.euler, tilted_only=True)
        out = out.reshape(x.shape)
        return out if out.ndim else float(out)


def _tilted_derivs(sc: NumericScale, x, order, euler, tilted_only=False):
    A, n, m = euler
    F = sc._tilted_transform
    g0 = sc.W0
    g1 = sc.W1_0 - sc.lead_root * g0
    g = euler_invert(F, x, A, n, m)
    if tilted_only:
        return g
    phi = sc.lead_root
    grow = np.exp(phi * x)
    if order == 0:
        return grow * g
    dg = euler_invert(lambda s: s * F(s) - g0, x, A, n, m)
    if order == 1:
        return grow * (phi * g + dg)
    d2g = euler_invert(lambda s: s * s * F(s) - s * g0 - g1, x, A, n, m)
    return grow * (phi * phi * g + 2 * phi * dg + d2g)


_EULER_SCHEDULE = [(18.4, 15, 11), (22.0, 22, 13), (26.0, 30, 16)]


def build_scale_numeric(model: LevyModel, q: float, delta_shift: float = 0.0, grid=None,
                        tol: float = 1e-8) -> NumericScale:
    """Invert ``1/(psi(l) - delta_shift*l - q)`` on ``grid``.

    Refinement walks a fixed schedule of Euler parameters until two
    consecutive settings agree to ``tol`` (relative) on the grid.
    """
    if not q > 0:
        raise ModelError(f"q must be > 0, got {q}")
    if delta_shift > 0:
        RefractionParams(delta_shift, q).check(model)
    lead = right_inverse(model, q, delta_shift)
    grid = np.linspace(0.01, 10.0, 200) if grid is None else np.asarray(grid, dtype=float)
    probe = NumericScale(model, float(q), float(delta_shift), lead, grid, np.empty(0), tol, np.inf)
    pos = grid[grid > 0]
    prev = None
    achieved = np.inf
    for params in _EULER_SCHEDULE:
        cur = _tilted_derivs(probe, pos, 0, params, tilted_only=True)
        if prev is not None:
            achieved = float(np.max(np.abs(cur - prev) / np.maximum(np.abs(cur), 1e-300)))
            if achieved <= tol:
                sc = NumericScale(model, float(q), float(delta_shift), lead, grid, np.empty(0), tol,
                                  achieved, prev_params)
                return _with_values(sc)
        prev, prev_params = cur, params
    raise InversionError("numerical inversion did not reach tolerance", achieved)


def _with_values(sc: NumericScale) -> NumericScale:
    object.__setattr__(sc, "values", np.asarray(sc.eval(sc.grid), dtype=float))
    return sc


def laplace_residual(scale, theta: float) -> float:
    """Relative deviation of the scale's Laplace transform from ``1/(psi - shift*theta - q)``."""
    if not theta > scale.lead_root:
        raise ModelError(f"theta={theta} must exceed the leading root {scale.lead_root}")
    exact = 1.0 / (scale.model.psi(theta) - scale.shift * theta - scale.q)
    got = scale.transform(theta)
    return float(abs(got - exact) / abs(exact))


def a_star(scale) -> float:
    """Minimiser of ``W'`` on ``[0, inf)``."""
    if isinstance(scale, NumericScale):
        return _a_star_scan(scale)
    if scale.eval(0.0, 2) >= 0:
        return 0.0
    hi = 1.0 / max(scale.lead_root, 1e-3)
    while scale.eval(hi, 2) <= 0:
        hi *= 2.0
        if hi > 1e6:
            raise ScaleConstructionError("W'' does not turn positive")
    return float(brentq(lambda x: scale.eval(x, 2), 0.0, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps))


def _a_star_scan(scale):
    hi = 20.0 / max(scale.lead_root, 1e-3)
    xs = np.linspace(0.0, hi, 2001)
    d1 = scale.eval(xs, 1)
    k = int(np.argmin(d1))
    if k == 0:
        return 0.0
    from scipy.optimize import minimize_scalar

    lo_, hi_ = xs[max(k - 1, 0)], xs[min(k + 1, len(xs) - 1)]
    res = minimize_scalar(lambda x: scale.eval(x, 1), bounds=(lo_, hi_), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x)


@dataclass(frozen=True)
class CMDecomposition:
    """``W(x) = amplitude * exp(tilt x) - remainder(x)``."""

    amplitude: float
    tilt: float
    remainder: Callable
    is_cm: bool
    min_remainder: float


def cm_decompose(scale: ExponentialSumScale, grid=None, atol: float = 1e-10) -> CMDecomposition:
    """Split off the dominant exponential and check the remainder is non-negative.

    ``is_cm`` is False when the remainder dips below ``-atol`` or fails to be
    non-increasing on the (log-spaced) grid.
    """
    amp = float(scale.weights[scale.lead].real)
    tilt = scale.lead_root

    def remainder(x, order: int = 0):
        x = np.asarray(x, dtype=float)
        coef = -(scale.weights * scale.roots**order)
        coef[scale.lead] = 0.0
        t = coef * np.exp(np.multiply.outer(x, scale.roots))
        _assert_real(t.sum(axis=-1), np.abs(t).sum(axis=-1))
        out = t.sum(axis=-1).real
        return out if out.ndim else float(out)

    grid = np.logspace(-4, 2, 400) if grid is None else np.asarray(grid, dtype=float)
    f = remainder(grid)
    df = remainder(grid, 1)
    is_cm = bool(np.all(f >= -atol) and np.all(df <= atol))
    return CMDecomposition(amp, tilt, remainder, is_cm, float(np.min(f)))


def dump_scale_csv(scale, xs, out: TextIO) -> None:
    """Write columns ``x, W, W1, W2`` with a header and 17 significant digits."""
    xs = np.asarray(xs, dtype=float)
    w0, w1, w2 = (np.atleast_1d(scale.eval(xs, k)) for k in (0, 1, 2))
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["x", "W", "W1", "W2"])
    for row in zip(xs, w0, w1, w2):
        writer.writerow([f"{v:.17g}" for v in row])
