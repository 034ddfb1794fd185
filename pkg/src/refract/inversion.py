"""Numerical Laplace inversion by Euler summation (Abate-Whitt).

Bromwich integral on the vertical line ``Re s = A / (2t)`` discretised by the
trapezoidal rule, with the alternating tail accelerated by binomial (Euler)
averaging. The discretisation error is about ``exp(-A) * f(3t)``, so the
transform must have all singularities in ``Re s <= 0``; callers shift the
transform first when that is not the case.
"""

from __future__ import annotations

import numpy as np
from scipy.special import comb

__all__ = ["euler_invert"]


def euler_invert(transform, t, A: float = 18.4, n: int = 15, m: int = 11):
    """Invert ``transform`` (vectorised, complex in, complex out) at times ``t > 0``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0):
        raise ValueError("inversion points must be > 0")
    k = np.arange(n + m + 1)
    s = (A / 2.0 + 1j * np.pi * k[None, :]) / t[:, None]
    vals = np.real(transform(s))
    vals[:, 0] *= 0.5
    terms = ((-1.0) ** k)[None, :] * vals
    partial = np.cumsum(terms, axis=1)[:, n:]
    weights = comb(m, np.arange(m + 1)) / 2.0**m
    total = partial @ weights
    return np.exp(A / 2.0) / t * total
