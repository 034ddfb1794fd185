"""Gamma(2,1) claims, c = 20.67, q = 0.1: the threshold-zero strategy fails the slope test.

Prints the checks, then v_0' on a grid around the violation.
"""

import argparse

import numpy as np

from refract import fixtures
from refract.cli import reproduce_remark
from refract.refraction import RefractionProblem


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--delta", type=float, default=fixtures.GAMMA2.delta)
    ap.add_argument("--q", type=float, default=fixtures.GAMMA2.q)
    args = ap.parse_args()

    doc = reproduce_remark(args.delta, args.q)
    for c in doc["checks"]:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}")

    prob = RefractionProblem.build(fixtures.GAMMA2.model, args.delta, args.q)
    vf = prob.value_function(0.0)
    print(f"\nphi(q) = {prob.phi:.12g}   Phi(q) = {prob.Phi:.12g}   v_0(0) = {vf.value(0.0):.12g}")
    print(f"{'x':>6} {'v_0(x)':>14} {'v_0_prime(x)':>14}")
    for x in np.linspace(1.0, 6.0, 11):
        print(f"{x:6.2f} {vf.value(x):14.8f} {vf.value_prime(x):14.8f}")


if __name__ == "__main__":
    main()
