"""Command-line front end.

Exit codes: 0 success, 2 invalid input (bad JSON, bad field, assumption (H)),
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from contextlib import contextmanager

import numpy as np

from . import fixtures
from .levy import ModelError, classify, model_from_dict, model_to_dict, right_inverse
from .refraction import RefractionProblem, hjb_verify
from .scale import a_star, build_scale, dump_scale_csv
from .simulate import SimConfig, simulate_value

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


class UsageError(ModelError):
    pass


def _grid(spec: str) -> np.ndarray:
    try:
        start, stop, n = spec.split(":")
        return np.linspace(float(start), float(stop), int(n))
    except ValueError:
        raise UsageError(f"--grid must look like 'start:stop:n', got {spec!r}") from None


def _load_model(path):
    if path is None:
        raise UsageError("--model is required")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc}") from None
    except OSError as exc:
        raise UsageError(f"cannot read model config {path}: {exc}") from None
    return model_from_dict(doc)


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required for '{args.command}'")


@contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _emit_json(doc, path):
    with _output(path) as fh:
        json.dump(doc, fh, indent=2, allow_nan=False)
        fh.write("\n")


def _fmt(v) -> str:
    return f"{v:.17g}"


def _write_rows(header, rows, path, fmt):
    with _output(path) as fh:
        if fmt == "json":
            json.dump([dict(zip(header, map(float, r))) for r in rows], fh, indent=2)
            fh.write("\n")
            return
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _config(args, model, **extra):
    doc = {"model": model_to_dict(model), "q": args.q, "delta": args.delta}
    doc.update(extra)
    return doc


def _problem(args):
    _need(args, "q", "delta")
    model = _load_model(args.model)
    return model, RefractionProblem.build(model, args.delta, args.q)


def cmd_info(args):
    model = _load_model(args.model)
    cls = classify(model)
    doc = {
        "variation": cls.variation.value,
        "c": cls.c,
        "jump_mass": cls.jump_mass,
        "sigma": model.sigma,
        "mean": model.mean,
        "completely_monotone": model.completely_monotone,
        "model": model_to_dict(model),
    }
    if args.q is not None:
        doc["Phi_q"] = right_inverse(model, args.q)
        if args.delta is not None:
            doc["phi_q"] = right_inverse(model, args.q, args.delta)
    _emit_json(doc, args.out)


def cmd_scale(args):
    _need(args, "q")
    model = _load_model(args.model)
    shift = 0.0
    if args.perturbed:
        _need(args, "delta")
        shift = args.delta
    sc = build_scale(model, args.q, shift)
    xs = _grid(args.grid or "0:10:101")
    if args.format == "json":
        rows = np.column_stack([xs] + [np.atleast_1d(sc.eval(xs, k)) for k in (0, 1, 2)])
        _write_rows(["x", "W", "W1", "W2"], rows, args.out, "json")
    else:
        with _output(args.out) as fh:
            dump_scale_csv(sc, xs, fh)


def _solution(model, prob, args):
    sol = prob.b_star()
    rep = hjb_verify(prob.value_function(sol.b_star))
    return {
        "b_star": sol.b_star,
        "case": sol.case.value,
        "a_star": sol.a_star,
        "phi_q": prob.phi,
        "Phi_q": prob.Phi,
        "h_at_bstar": sol.h_at_bstar,
        "criterion": None if sol.criterion is None else sol.criterion.value,
        "unique": sol.unique,
        "hjb": rep.as_dict(),
        "config": _config(args, model),
    }


def cmd_solve(args):
    model, prob = _problem(args)
    _emit_json(_solution(model, prob, args), args.out)


def _threshold(args, prob):
    return prob.b_star().b_star if args.b is None else args.b


def cmd_value(args):
    model, prob = _problem(args)
    b = _threshold(args, prob)
    vf = prob.value_function(b)
    xs = _grid(args.grid or f"0:{max(3 * b, 10 / prob.Phi):.17g}:201")
    v = np.atleast_1d(vf.value(xs))
    v1 = np.full_like(v, math.nan)
    pos = xs > 0
    v1[pos] = np.atleast_1d(vf.value_prime(xs[pos]))
    _write_rows(["x", "v", "v1"], np.column_stack([xs, v, v1]), args.out, args.format)


def cmd_verify(args):
    model, prob = _problem(args)
    b = _threshold(args, prob)
    rep = hjb_verify(prob.value_function(b), x_max=args.x_max)
    doc = rep.as_dict()
    doc["config"] = _config(args, model, b=b)
    _emit_json(doc, args.out)


def cmd_simulate(args):
    model, prob = _problem(args)
    _need(args, "x0")
    b = _threshold(args, prob)
    cfg = SimConfig(n_paths=args.paths, seed=args.seed, bias_tol=args.bias_tol, euler_dt=args.euler_dt)
    est = simulate_value(prob, b, args.x0, cfg, keep_paths=args.paths_csv is not None)
    doc = est.as_dict()
    doc["config"] = _config(args, model, b=b, x0=args.x0, euler_dt=args.euler_dt, bias_tol=args.bias_tol)
    _emit_json(doc, args.out)
    if args.paths_csv is not None:
        end = np.where(np.isfinite(est.ruin_times), est.ruin_times, est.T)
        rows = np.column_stack([np.arange(est.n_paths), end, est.dividends])
        with _output(args.paths_csv) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["path_id", "ruin_time_or_T", "discounted_dividends"])
            for pid, t, d in rows:
                w.writerow([int(pid), _fmt(t), _fmt(d)])


def reproduce_remark(delta: float | None = None, q: float | None = None) -> dict:
    """Run the Gamma(2,1) counterexample checks and return a report."""
    fx = fixtures.GAMMA2
    delta = fx.delta if delta is None else delta
    q = fx.q if q is None else q
    prob = RefractionProblem.build(fx.model, delta, q)
    checks = []
    xs = np.linspace(0.01, 20.0, 1000)
    w2 = prob.W.eval(xs, 2)
    checks.append({"name": "W'' > 0 on (0.01, 20]", "passed": bool(np.all(w2 > 0)), "min": float(w2.min())})
    bs = np.linspace(0.0, 20.0, 1000)
    hp = prob.h_prime(bs)
    checks.append({"name": "h increasing on [0, 20]", "passed": bool(np.all(hp > 0)), "min": float(hp.min())})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sol = prob.b_star()
    checks.append({"name": "b* = 0", "passed": sol.b_star == 0.0, "value": sol.b_star, "case": sol.case.value})
    vf = prob.value_function(0.0)
    d = float(vf.value_prime(3.15))
    checks.append({"name": "v0'(3.15) in [1.0000, 1.0010]", "passed": 1.0 <= d <= 1.001, "value": d,
                   "reference": 1.0005})
    rep = hjb_verify(vf, x_max=10.0)
    checks.append({"name": "slope condition violated near x = 3.15",
                   "passed": (not rep.holds) and abs(rep.location - 3.15) < 0.5, "hjb": rep.as_dict()})
    return {
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
        "b_star": sol.b_star,
        "phi_q": prob.phi,
        "Phi_q": prob.Phi,
        "config": {"model": model_to_dict(fx.model), "q": q, "delta": delta},
    }


def cmd_reproduce_remark(args):
    doc = reproduce_remark(args.delta, args.q)
    if args.out is None and args.format != "json":
        for c in doc["checks"]:
            extra = c.get("value")
            tail = "" if extra is None else f"  ({extra:.6g})"
            print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}{tail}")
        return
    _emit_json(doc, args.out)


COMMANDS = {
    "info": cmd_info,
    "scale": cmd_scale,
    "solve": cmd_solve,
    "value": cmd_value,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "reproduce-remark": cmd_reproduce_remark,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="refract", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--model", help="model config (JSON)")
    ap.add_argument("--q", type=float, help="discount rate")
    ap.add_argument("--delta", type=float, help="ceiling dividend rate")
    ap.add_argument("--b", type=float, help="threshold (default: optimal b*)")
    ap.add_argument("--x0", type=float, help="initial capital for simulate")
    ap.add_argument("--grid", help="'start:stop:n'")
    ap.add_argument("--x-max", type=float, dest="x_max")
    ap.add_argument("--paths", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--bias-tol", type=float, default=1e-6, dest="bias_tol")
    ap.add_argument("--euler-dt", type=float, default=0.01, dest="euler_dt")
    ap.add_argument("--perturbed", action="store_true", help="scale: dump the scale function of X - delta t")
    ap.add_argument("--paths-csv", dest="paths_csv", help="simulate: per-path CSV dump")
    ap.add_argument("--out", help="output path (default stdout)")
    ap.add_argument("--format", choices=["json", "csv"], default=None)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    if args.format is None:
        args.format = "csv" if args.command in ("scale", "value") else "text"
    try:
        COMMANDS[args.command](args)
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
