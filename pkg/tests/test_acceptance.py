"""Acceptance criteria, one PASS/FAIL line each.

Run directly (``python tests/test_acceptance.py``) or through pytest, which
prints the same lines in its terminal summary.
"""

import math
import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import pytest

from refract import fixtures
from refract.cli import reproduce_remark
from refract.refraction import RefractionProblem, convolution_identity_residual, hjb_verify
from refract.scale import build_scale, laplace_residual
from refract.simulate import SimConfig, simulate_value

LINES = []


@dataclass
class Result:
    number: int
    title: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number}: {self.title} ({self.detail})"


def _problem(name):
    f = fixtures.ALL[name]
    return RefractionProblem.build(f.model, f.delta, f.q)


def criterion_1():
    t0 = time.perf_counter()
    doc = reproduce_remark()
    elapsed = time.perf_counter() - t0
    by = {c["name"]: c for c in doc["checks"]}
    slope = by["v0'(3.15) in [1.0000, 1.0010]"]["value"]
    loc = by["slope condition violated near x = 3.15"]["hjb"]["location"]
    ok = doc["passed"] and elapsed < 1.0
    return Result(1, "Gamma(2,1) example", ok,
                  f"v0'(3.15)={slope:.6f}, violation at x={loc:.3f}, b*={doc['b_star']}, {elapsed:.2f}s < 1s")


def criterion_2():
    t0 = time.perf_counter()
    worst = 0.0
    for name in ("brownian-sinh", "exp-claims", "hx1", "gamma2"):
        f = fixtures.ALL[name]
        sc = build_scale(f.model, f.q)
        for gap in (0.5, 1.0, 2.0, 5.0, 10.0):
            worst = max(worst, laplace_residual(sc, sc.lead_root + gap))
    elapsed = time.perf_counter() - t0
    return Result(2, "Laplace identity", worst < 1e-9 and elapsed < 1.0,
                  f"max residual {worst:.2e} < 1e-9, {elapsed:.2f}s < 1s")


def _rel(a, b):
    err = abs(a - b) / abs(b) if b else abs(a)
    return err if math.isfinite(err) else math.inf


def criterion_3():
    worst = 0.0
    for f in fixtures.ALL.values():
        m = f.model
        W = build_scale(m, f.q)
        if m.sigma > 0:
            worst = max(worst, abs(W.eval(0.0)), _rel(W.eval(0.0, 1), 2 / m.sigma**2))
        else:
            c, eta = m.premium, m.jump_rate
            worst = max(worst, _rel(W.eval(0.0), 1 / c), _rel(W.eval(0.0, 1), (eta + f.q) / c**2))
        if f.delta is not None:
            WW = build_scale(m, f.q, f.delta)
            target = 0.0 if m.sigma > 0 else 1 / (m.premium - f.delta)
            worst = max(worst, _rel(WW.eval(0.0), target))
    return Result(3, "boundary values at 0+", worst < 1e-8, f"max rel. error {worst:.2e} < 1e-8")


def criterion_4():
    rng = np.random.default_rng(20240401)
    fd, lb, h0 = [], [], []
    step = 1e-6
    for name in ("hx1", "hx1-brownian", "gamma2"):
        p = _problem(name)
        h0.append(abs(p.h(0.0) - p.phi * (1 / p.delta - p.W.W0)))
        for b in rng.uniform(0.01, 10.0, 50):
            fd.append(_rel((p.h(b + step) - p.h(b - step)) / (2 * step), p.h_prime(b)))
            bound = p.W.eval(b) * p.phi * p.Phi / (p.phi - p.Phi)
            lb.append((bound - p.h(b)) / bound)
    fd_worst, lb_worst, h0_worst = (float(np.max(v)) for v in (fd, lb, h0))
    p = _problem("hx1")
    bs = p.b_star().b_star
    grid = np.linspace(0, 20, 4001)
    g = p.h(grid) - p.W.eval(grid, 1)
    flips = np.flatnonzero(np.diff(np.sign(g)))
    sign_ok = len(flips) == 1 and grid[flips[0]] <= bs <= grid[flips[0] + 1] and g[0] < 0
    ok = fd_worst < 1e-5 and h0_worst < 1e-10 and lb_worst <= 1e-10 and sign_ok
    return Result(4, "h structure", ok,
                  f"h' vs FD {fd_worst:.1e}, |h(0) - phi(1/delta - W(0))| {h0_worst:.1e}, "
                  f"max (bound - h)/bound {lb_worst:.1e}, single sign change at b*={sign_ok}")


def criterion_5():
    p = _problem("hx1")
    sol = p.b_star()
    grid = np.arange(0.0, sol.a_star, 1e-4)
    gmin = grid[np.argmin(p.h(grid))]
    slope = p.value_function(sol.b_star).value_prime(sol.b_star)
    ok = abs(gmin - sol.b_star) < 2e-4 and sol.b_star < sol.a_star and abs(slope - 1) < 1e-8
    return Result(5, "threshold vs grid oracle (HX1)", ok,
                  f"b*={sol.b_star:.6f}, grid argmin {gmin:.4f}, a*={sol.a_star:.4f}, |v'(b*)-1|={abs(slope-1):.1e}")


def criterion_6():
    parts = []
    ok = True
    for name in ("hx1", "hx1-brownian"):
        p = _problem(name)
        bs = p.b_star().b_star
        at = hjb_verify(p.value_function(bs)).holds
        lo = hjb_verify(p.value_function(bs - 0.5)).holds
        hi = hjb_verify(p.value_function(bs + 0.5)).holds
        ok &= at and not lo and not hi
        parts.append(f"{name}: holds at b*={at}, at b*-0.5={lo}, at b*+0.5={hi}")
    return Result(6, "slope conditions", ok, "; ".join(parts))


MC_POINTS = {"hx1": lambda bs: (bs / 2, bs, 2 * bs), "gamma2": lambda bs: (0.0, 1.0, 5.0)}


def _mc_reports(seed=0):
    out = {}
    for name, pts in MC_POINTS.items():
        p = _problem(name)
        bs = p.b_star().b_star
        cfg = SimConfig(n_paths=100_000, seed=seed, bias_tol=1e-6 * p.delta / p.q)
        t0 = time.perf_counter()
        rows = []
        for x in pts(bs):
            est = simulate_value(p, bs, x, cfg)
            rows.append((x, est.as_dict(), float(p.value_function(bs).value(x))))
        out[name] = (rows, time.perf_counter() - t0)
    return out


@lru_cache(maxsize=None)
def _mc_cached():
    return _mc_reports()


def criterion_7():
    ok = True
    parts = []
    for name, (rows, elapsed) in _mc_cached().items():
        zs = []
        for x, est, exact in rows:
            z = (est["mean"] - exact) / est["stderr"]
            zs.append(z)
            ok &= abs(z) < 3 and est["stderr"] / est["mean"] < 0.01
        ok &= elapsed < 60
        parts.append(f"{name}: z=" + ",".join(f"{z:+.2f}" for z in zs) + f" in {elapsed:.1f}s")
    return Result(7, "Monte Carlo vs analytic", ok, "; ".join(parts))


def criterion_8():
    rng = np.random.default_rng(7)
    res = []
    for name in ("hx1", "hx1-brownian", "gamma2"):
        p = _problem(name)
        res += [convolution_identity_residual(p, x) for x in rng.uniform(0.05, 10.0, 20)]
    worst = float(np.max(res))
    return Result(8, "convolution identity", worst < 1e-7, f"max residual {worst:.2e} < 1e-7")


def criterion_9():
    first = {k: [r[1] for r in rows] for k, (rows, _) in _mc_cached().items()}
    second = {k: [r[1] for r in rows] for k, (rows, _) in _mc_reports().items()}
    same = first == second
    return Result(9, "determinism", same, "repeat of criterion 7 with seed 0 " + ("identical" if same else "differs"))


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9]


@pytest.mark.parametrize("crit", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 10)])
def test_acceptance(crit):
    res = crit()
    LINES.append(res.line())
    print(res.line())
    assert res.passed, res.line()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    for r in results:
        print(r.line())
    raise SystemExit(0 if all(r.passed for r in results) else 1)
