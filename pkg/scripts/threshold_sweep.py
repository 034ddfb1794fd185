"""Optimal threshold b* as the ceiling rate delta varies; writes CSV to stdout."""

import argparse
import csv
import sys

import numpy as np

from refract import fixtures
from refract.refraction import RefractionProblem, hjb_verify, positivity_criterion


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fixture", default="hx1", choices=[k for k, f in fixtures.ALL.items() if f.delta])
    ap.add_argument("--n", type=int, default=25)
    args = ap.parse_args()
    f = fixtures.ALL[args.fixture]
    upper = f.model.premium if f.model.sigma == 0 else 4 * f.delta
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["delta", "b_star", "a_star", "criterion", "hjb_holds", "worst_violation"])
    for delta in np.linspace(0.05 * upper, 0.98 * upper, args.n):
        prob = RefractionProblem.build(f.model, delta, f.q)
        sol = prob.b_star()
        rep = hjb_verify(prob.value_function(sol.b_star))
        crit = positivity_criterion(prob)
        w.writerow([f"{delta:.6g}", f"{sol.b_star:.10g}", f"{sol.a_star:.10g}",
                    crit.value if crit else "-", rep.holds, f"{rep.worst_violation:.3g}"])


if __name__ == "__main__":
    main()
