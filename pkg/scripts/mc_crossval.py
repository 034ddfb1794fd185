"""Monte Carlo vs closed-form value at a few starting points, per fixture."""

import argparse
import time

import numpy as np

from refract import fixtures
from refract.refraction import RefractionProblem
from refract.simulate import SimConfig, simulate_value


def run(name, paths, seed, dt):
    f = fixtures.ALL[name]
    prob = RefractionProblem.build(f.model, f.delta, f.q)
    b = prob.b_star().b_star
    cfg = SimConfig(n_paths=paths, seed=seed, bias_tol=1e-6 * f.delta / f.q, euler_dt=dt)
    xs = (b / 2, b, 2 * b) if b > 0 else (0.0, 1.0, 5.0)
    print(f"{name}: b* = {b:.6f}  (sigma = {f.model.sigma})")
    for x in xs:
        t0 = time.perf_counter()
        est = simulate_value(prob, b, x, cfg)
        exact = float(prob.value_function(b).value(x))
        z = (est.mean - exact) / est.stderr
        print(f"  x0={x:7.4f}  analytic={exact:.6f}  mc={est.mean:.6f} +- {est.stderr:.6f}"
              f"  z={z:+.2f}  ruined={est.n_ruined}  {time.perf_counter() - t0:.1f}s")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("fixtures", nargs="*", default=["hx1", "gamma2"], choices=sorted(fixtures.ALL))
    ap.add_argument("--paths", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--euler-dt", type=float, default=0.01)
    args = ap.parse_args()
    for name in args.fixtures:
        if fixtures.ALL[name].delta is None:
            continue
        run(name, args.paths, args.seed, args.euler_dt)


if __name__ == "__main__":
    main()
