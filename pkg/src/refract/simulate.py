"""Monte Carlo for the refracted process ``dU = dX - delta 1{U >= b} dt``.

Compound Poisson models (sigma = 0) are simulated exactly, event by event:
between claims U is linear with slope ``c`` below ``b`` and ``c - delta``
above, so the discounted dividends of each inter-claim segment are
integrated in closed form. With ``sigma > 0`` an Euler scheme is used with
the pay indicator frozen per step and a Brownian-bridge ruin correction.

All paths advance together as numpy arrays; randomness comes from
:mod:`refract.rng`, keyed by (seed, path index, event/step index).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .levy import LevyModel, ModelError
from .rng import uniforms

__all__ = [
    "SimConfig",
    "SimEstimate",
    "SurvivalEstimate",
    "simulate_value",
    "survival_probability",
    "segment_dividends",
    "sample_levy",
]


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``horizon=None`` picks the smallest ``T`` with ``delta/q * exp(-q T) <= bias_tol``.
    ``bias_tol`` is absolute (currency units).
    """

    n_paths: int = 100_000
    seed: int = 0
    bias_tol: float = 1e-6
    horizon: float | None = None
    euler_dt: float = 0.01
    workers: int | None = None

    def __post_init__(self):
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ModelError("n_paths must be a positive integer")
        if self.horizon is not None and not self.horizon > 0:
            raise ModelError("horizon must be > 0")
        if not self.bias_tol > 0:
            raise ModelError("bias_tol must be > 0")
        if not self.euler_dt > 0:
            raise ModelError("euler_dt must be > 0")
        if self.workers is not None and self.workers < 1:
            raise ModelError("workers must be >= 1")

    def resolve_horizon(self, delta: float, q: float) -> float:
        if self.horizon is not None:
            return float(self.horizon)
        return max(math.log(delta / (q * self.bias_tol)) / q, 1.0 / q)


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    stderr: float
    n_paths: int
    n_ruined: int
    T: float
    bias_bound: float
    seed: int
    ruin_times: np.ndarray | None = field(default=None, repr=False)
    dividends: np.ndarray | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "n_paths": self.n_paths,
            "n_ruined": self.n_ruined,
            "T": self.T,
            "bias_bound": self.bias_bound,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class SurvivalEstimate:
    probability: float
    stderr: float
    n_paths: int
    T: float
    positive_net_drift: bool

    def as_dict(self) -> dict:
        return {
            "probability": self.probability,
            "stderr": self.stderr,
            "n_paths": self.n_paths,
            "T": self.T,
            "positive_net_drift": self.positive_net_drift,
        }


def segment_dividends(u, t, dt, b, c, delta, q):
    """Advance U linearly for ``dt`` from ``(u, t)``; return ``(u_end, discounted dividends)``.

    Slope is ``c`` while ``u < b`` and ``c - delta`` once ``u >= b``; both
    positive, so the level b is crossed at most once, upward.
    """
    u = np.asarray(u, dtype=float)
    t = np.asarray(t, dtype=float)
    dt = np.asarray(dt, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        hit = np.where(u >= b, 0.0, (b - u) / c)
    paid = np.maximum(dt - hit, 0.0)
    start = t + np.minimum(hit, dt)
    div = delta * np.exp(-q * start) * (-np.expm1(-q * paid)) / q
    u_end = np.where(paid > 0, np.where(u >= b, u, b) + (c - delta) * paid, u + c * dt)
    return u_end, np.where(paid > 0, div, 0.0)


def _claims(jumps, seed, paths, step, first_block):
    """One claim per path; Erlang(m, alpha) sampled as a sum of m exponentials."""
    u = uniforms(seed, paths, step, first_block)
    comp = np.searchsorted(np.cumsum(jumps.weights), u[0] * 1.0, side="right")
    comp = np.minimum(comp, len(jumps.weights) - 1)
    alphas = np.asarray(jumps.alphas)[comp]
    shapes = np.asarray(jumps.shapes)[comp]
    total = -np.log(u[1])
    mmax = int(max(jumps.shapes))
    for k in range(1, mmax):
        uu = uniforms(seed, paths, step, first_block + 1 + (k - 1) // 2)[(k - 1) % 2]
        total = total + np.where(shapes > k, -np.log(uu), 0.0)
    return total / alphas


def _run_exact(model, delta, q, b, x0, T, seed, paths):
    n = len(paths)
    c = model.premium
    jumps = model.jumps
    u = np.full(n, float(x0))
    t = np.zeros(n)
    div = np.zeros(n)
    ruin = np.full(n, np.inf)
    alive = np.arange(n)
    step = 0
    while alive.size:
        pid = paths[alive]
        e = uniforms(seed, pid, step, 0)
        tau = -np.log(e[0]) / jumps.rate
        rem = T - t[alive]
        arrived = tau < rem
        dt = np.where(arrived, tau, rem)
        u_new, d = segment_dividends(u[alive], t[alive], dt, b, c, delta, q)
        div[alive] += d
        t[alive] += dt
        z = _claims(jumps, seed, pid, step, 1)
        u_new = np.where(arrived, u_new - z, u_new)
        ruined = arrived & (u_new < 0)
        u[alive] = u_new
        ruin[alive[ruined]] = t[alive[ruined]]
        alive = alive[arrived & ~ruined]
        step += 1
    return div, ruin


def _run_euler(model, delta, q, b, x0, T, dt, seed, paths):
    n = len(paths)
    c, sig = model.premium, model.sigma
    jumps = model.jumps
    nsteps = int(math.ceil(T / dt - 1e-12))
    u = np.full(n, float(x0))
    div = np.zeros(n)
    ruin = np.full(n, np.inf)
    alive = np.arange(n)
    sq = math.sqrt(dt)
    disc_step = -math.expm1(-q * dt) / q
    for k in range(nsteps):
        if not alive.size:
            break
        pid = paths[alive]
        t0 = k * dt
        h = min(dt, T - t0)
        ua = u[alive]
        pay = ua >= b
        step_disc = disc_step if h == dt else -math.expm1(-q * h) / q
        div[alive] += np.where(pay, delta * math.exp(-q * t0) * step_disc, 0.0)
        g = uniforms(seed, pid, k, 0)
        z = np.sqrt(-2.0 * np.log(g[0])) * np.cos(2.0 * np.pi * g[1])
        cont = ua + (c - delta * pay) * h + sig * math.sqrt(h) * z
        v = uniforms(seed, pid, k, 1)
        # probability the Brownian bridge dips below 0 within the step
        with np.errstate(over="ignore"):
            cross = np.exp(-2.0 * np.maximum(ua, 0.0) * np.maximum(cont, 0.0) / (sig * sig * h))
        ruined = (cont < 0) | (v[1] < cross)
        if jumps is not None:
            lam = jumps.rate * h
            # Poisson count by inversion
            cnt = np.zeros(alive.size, dtype=int)
            p = math.exp(-lam)
            cdf = p
            for j in range(1, 20):
                cnt += v[0] > cdf
                p *= lam / j
                cdf += p
            hit = np.flatnonzero(cnt > 0)
            loss = np.zeros(alive.size)
            for j in range(int(cnt.max(initial=0))):
                sel = hit[cnt[hit] > j]
                loss[sel] += _claims(jumps, seed, pid[sel], k, 2 + 8 * j)
            cont = cont - loss
            ruined |= cont < 0
        u[alive] = cont
        ruin[alive[ruined]] = t0 + h
        alive = alive[~ruined]
    return div, ruin


def _fan_out(fn, n_paths, workers):
    """Run ``fn(path_ids)`` over contiguous chunks; results are per-path so order is fixed."""
    if workers is None:
        workers = int(os.environ.get("REFRACT_THREADS", "1") or 1)
    workers = max(1, min(workers, n_paths))
    ids = np.arange(n_paths, dtype=np.uint64)
    chunks = np.array_split(ids, workers)
    if workers == 1:
        parts = [fn(chunks[0])]
    else:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(fn, chunks))
    return tuple(np.concatenate(p) for p in zip(*parts))


def _paths(problem, b, x0, config):
    model = problem.model
    delta, q = problem.delta, problem.q
    if not x0 >= 0:
        raise ModelError("x0 must be >= 0")
    problem.params.check(model)
    T = config.resolve_horizon(delta, q)
    if model.sigma == 0:
        fn = lambda ids: _run_exact(model, delta, q, b, x0, T, config.seed, ids)
    else:
        fn = lambda ids: _run_euler(model, delta, q, b, x0, T, config.euler_dt, config.seed, ids)
    div, ruin = _fan_out(fn, int(config.n_paths), config.workers)
    return div, ruin, T


def simulate_value(problem, b: float, x0: float, config: SimConfig = SimConfig(),
                   keep_paths: bool = False) -> SimEstimate:
    """Estimate ``E_x0[ delta * int_0^{ruin ^ T} e^{-qs} 1{U_s >= b} ds ]``.

    ``b = inf`` never pays and returns exactly zero.
    """
    div, ruin, T = _paths(problem, b, x0, config)
    n = len(div)
    mean = float(np.sum(div) / n)
    var = float(np.sum((div - mean) ** 2) / (n - 1)) if n > 1 else 0.0
    return SimEstimate(
        mean=mean,
        stderr=math.sqrt(var / n),
        n_paths=n,
        n_ruined=int(np.sum(np.isfinite(ruin))),
        T=T,
        bias_bound=problem.delta / problem.q * math.exp(-problem.q * T),
        seed=int(config.seed),
        ruin_times=ruin if keep_paths else None,
        dividends=div if keep_paths else None,
    )


def survival_probability(problem, b: float, x0: float, config: SimConfig = SimConfig()) -> SurvivalEstimate:
    """Fraction of paths not ruined before the horizon.

    ``positive_net_drift`` flags ``psi'(0+) > delta``: then the estimate
    should stay bounded away from 0 as the horizon grows.
    """
    _, ruin, T = _paths(problem, b, x0, config)
    n = len(ruin)
    p = float(np.sum(~np.isfinite(ruin)) / n)
    return SurvivalEstimate(p, math.sqrt(p * (1 - p) / n), n, T, problem.model.mean > problem.delta)


def sample_levy(model: LevyModel, t: float, n: int, seed: int = 0) -> np.ndarray:
    """Draw ``n`` samples of ``X_t`` started at 0."""
    ids = np.arange(n, dtype=np.uint64)
    out = model.premium * t + np.zeros(n)
    if model.sigma > 0:
        g = uniforms(seed, ids, 0, 0)
        out += model.sigma * math.sqrt(t) * np.sqrt(-2 * np.log(g[0])) * np.cos(2 * np.pi * g[1])
    if model.jumps is not None:
        clock = np.zeros(n)
        active = np.arange(n)
        k = 1
        while active.size:
            e = uniforms(seed, ids[active], k, 0)
            clock[active] += -np.log(e[0]) / model.jumps.rate
            inside = clock[active] <= t
            active = active[inside]
            if active.size:
                out[active] -= _claims(model.jumps, seed, ids[active], k, 1)
            k += 1
    return out
