"""Command-line interface: ``rcvar simulate | sweep | theory | fit``.

Failures exit with status 2 and print a one-line JSON object
``{"error": <code>, "message": <text>}`` on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings

import numpy as np

from . import harness, theory
from .core import derive_rng
from .errors import ConfigurationError, RcvarError


def _ints(text: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _names(text: str) -> list:
    return [t.strip() for t in text.split(",") if t.strip()]


def _config(args) -> harness.ExperimentConfig:
    overrides = dict(
        b=args.b,
        rho=args.rho,
        reps=args.reps,
        seed=args.seed,
        parallelism=args.parallelism,
        methods=tuple(args.methods) if getattr(args, "methods", None) else None,
    )
    if args.config:
        if overrides["rho"] is not None:
            raise ConfigurationError("--rho only applies to presets; set [cov] in the config file")
        overrides.pop("rho")
        return harness.load_config(args.config, **overrides)
    return harness.preset(args.preset, **overrides)


def _write_table(rows, header, out):
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([f"{v:.6g}" if isinstance(v, float) else v for v in r])
    finally:
        if out:
            fh.close()


def cmd_simulate(args):
    cfg = _config(args)
    result = harness.run_experiment(cfg)
    if args.out:
        harness.emit(result, args.format, args.out)
    else:
        sys.stdout.write(harness.metrics_csv(result.metrics))
    if args.json:
        harness.emit(result, "json", args.json)
    if args.long:
        harness.emit(result, "long", args.long)


def cmd_sweep(args):
    cfg = _config(args)
    rows = harness.sweep_model_size(cfg, args.families, args.sizes)
    _write_table([(r.method, r.s, r.median, r.reps_used) for r in rows], ["method", "s", "median_sigma2", "reps_used"], args.out)


def cmd_theory(args):
    rng = int(args.seed)
    if args.kind == "gumbel":
        s = theory.extreme_correlations(args.n, args.p, args.reps, rng)
        tb = theory.tail_bound_check(args.n, args.p, args.c, max(args.reps, 100), rng)
        g = theory.gumbel_quantities(args.n, args.p)
        out = {
            "n": args.n,
            "p": args.p,
            "reps": args.reps,
            "median_gamma": s.median,
            "predicted_median": g.quantile(0.5),
            "d_2p": g.d_2p,
            "centering": g.centering,
            "tail_c": args.c,
            "tail_empirical": tb.empirical,
            "tail_bound": tb.bound,
            "tail_passed": tb.passed,
        }
    else:
        law = theory.NoiseLaw(args.noise, q=args.q)
        P = np.full((args.m, args.m), 1.0 / args.m)  # rank-one projection
        rep = theory.quadratic_form_moments(P, law, args.reps, derive_rng(rng, "quadform"))
        out = {
            "m": args.m,
            "noise": args.noise,
            "reps": args.reps,
            "mean_emp": rep.mean_emp,
            "mean_theory": rep.mean_theory,
            "var_emp": rep.var_emp,
            "var_exact": rep.var_exact,
            "var_bound": rep.var_bound,
            "passed": rep.passed,
        }
    text = json.dumps(out, indent=1)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_fit(args):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # the dropped-row count is reported below
        data, dropped = harness.read_csv_dataset(args.data, args.response, args.keep or ())
    rows = harness.fit_sweep(data, args.method, args.sweep_sizes, args.seed)
    _write_table(
        [(r.method, r.s, r.sigma, "" if math.isnan(r.r2) else r.r2, r.model_size) for r in rows],
        ["method", "s", "sigma", "r2", "model_size"],
        args.out,
    )
    if dropped:
        print(json.dumps({"dropped_rows": dropped}), file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    """Usage errors in the same JSON shape as runtime errors."""

    def error(self, message):
        print(json.dumps({"error": "usage-error", "message": f"{self.prog}: {message}"}), file=sys.stderr)
        sys.exit(2)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rcvar", description="Residual variance estimation for sparse high-dimensional regression.")
    sub = p.add_subparsers(dest="command", required=True)

    def experiment_args(sp):
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--preset", default="example1", choices=("example1", "example2", "example3"))
        src.add_argument("--config", help="TOML experiment file")
        sp.add_argument("--b", type=float)
        sp.add_argument("--rho", type=float)
        sp.add_argument("--reps", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--parallelism", type=int, help=f"worker processes (default ${harness.WORKERS_ENV} or 1)")
        sp.add_argument("--out")

    s = sub.add_parser("simulate", help="run a Monte Carlo experiment")
    experiment_args(s)
    s.add_argument("--methods", type=_names, help="comma-separated method tags")
    s.add_argument("--format", choices=("csv", "json", "long"), default="csv")
    s.add_argument("--json", help="also write full records as JSON")
    s.add_argument("--long", help="also write (method, value) figure data")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="median estimate against selected model size")
    experiment_args(w)
    w.add_argument("--methods", dest="families", type=_names, required=True, help="families such as naive-sis,rcv-sis")
    w.add_argument("--sizes", type=_ints, required=True)
    w.set_defaults(func=cmd_sweep)

    t = sub.add_parser("theory", help="spurious-correlation and quadratic-form checks")
    t.add_argument("kind", choices=("gumbel", "quadform"))
    t.add_argument("--n", type=int, default=50)
    t.add_argument("--p", type=int, default=1000)
    t.add_argument("--c", type=float, default=math.log(2))
    t.add_argument("--m", type=int, default=3)
    t.add_argument("--noise", choices=("gaussian", "two-point"), default="gaussian")
    t.add_argument("--q", type=float, default=0.5, help="two-point mass on the negative atom")
    t.add_argument("--reps", type=int, default=500)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out")
    t.set_defaults(func=cmd_theory)

    f = sub.add_parser("fit", help="naive and RCV estimates on a CSV dataset")
    f.add_argument("--data", required=True)
    f.add_argument("--response", required=True)
    f.add_argument("--keep", type=_names)
    f.add_argument("--method", default="rcv-scad")
    f.add_argument("--sweep-sizes", type=_ints, default=[2, 3, 5, 10, 15, 20, 30])
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except RcvarError as exc:
        print(json.dumps({"error": exc.code, "message": str(exc)}), file=sys.stderr)
        return 2
    except OSError as exc:
        print(json.dumps({"error": "io-error", "message": str(exc)}), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
