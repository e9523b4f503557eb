"""Batch experiment runner.

One experiment per invocation; reports are written as a JSON document
(structured format) and optionally as a flat CSV table.  Exit codes:
0 = all gates passed, 1 = a gate failed, 2 = configuration error,
3 = internal numeric error or I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time

import numpy as np

from . import cwold, limit_theory, mc_engine, monotone
from .errors import CondCltError

EXIT_OK = 0
EXIT_GATE_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_ERROR = 3

TABLE_HEADER = ["experiment", "entry_i", "entry_j", "theory", "estimate", "stderr", "z"]


class ConfigError(Exception):
    pass


def _read_config_file(path: str) -> dict:
    values = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, _, val = line.partition("=")
                values[key.strip()] = val.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    return values


def _apply_config_defaults(parser: argparse.ArgumentParser, args: list[str]) -> list[str]:
    """Pull --config out of args and turn its key=value lines into parser
    defaults, so explicit flags override file values."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(args)
    if known.config is None:
        return args
    file_values = _read_config_file(known.config)
    valid = {a.dest for a in parser._actions}
    for sub_action in parser._subparsers._group_actions if parser._subparsers else []:
        for sub in sub_action.choices.values():
            valid |= {a.dest for a in sub._actions}
    for key, val in file_values.items():
        if key not in valid:
            raise ConfigError(f"unknown config key {key!r}")
    parser.set_defaults(**file_values)
    if parser._subparsers:
        for sub_action in parser._subparsers._group_actions:
            for sub in sub_action.choices.values():
                applicable = {k: v for k, v in file_values.items()
                              if k in {a.dest for a in sub._actions}}
                sub.set_defaults(**applicable)
    return args


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condclt",
        description="Run one conditional-limit verification experiment.",
    )
    parser.add_argument("--config", help="key=value config file; flags override it")
    sub = parser.add_subparsers(dest="experiment", required=True)

    def common(p, sampling=True):
        p.add_argument("--seed", type=int, default=0, help="master RNG seed (default 0)")
        p.add_argument("--out", help="JSON report path")
        p.add_argument("--table", help="CSV comparison table path")
        if sampling:
            p.add_argument("--reps", type=int, default=1000,
                           help="Monte Carlo replicates (default 1000)")
            p.add_argument("--z-gate", type=float, default=mc_engine.DEFAULT_Z_GATE,
                           help="max |z| accepted (default 4)")
            p.add_argument("--ks-gate", type=float, default=mc_engine.DEFAULT_KS_GATE,
                           help="max KS distance accepted (default 0.05)")
            p.add_argument("--workers", type=int,
                           default=int(os.environ.get("CONDCLT_THREADS", "1")),
                           help="worker processes (does not affect results)")
            p.add_argument("--dump", help="binary dump path for raw count vectors")

    p = sub.add_parser("alloc", help="balls-into-boxes occupancy counts")
    p.add_argument("--n", type=int, required=True, help="number of boxes")
    p.add_argument("--m", type=int, required=True, help="number of balls")
    p.add_argument("--max-k", type=int, default=5, help="largest tracked count index")
    common(p)

    p = sub.add_parser("gnp", help="G(n,p) degree counts")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--max-k", type=int, default=8)
    common(p)

    p = sub.add_parser("gnm", help="G(n,m) degree counts")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--max-k", type=int, default=8)
    common(p)

    p = sub.add_parser("spacings", help="uniform spacings exceedance counts")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--a", type=float, default=1.0, help="threshold multiple of 1/n")
    common(p)

    p = sub.add_parser("transfer", help="analytic G(n,p) -> G(n,m) covariance transfer")
    p.add_argument("--lam", type=float, default=2.0)
    p.add_argument("--K", type=int, default=60, help="truncation index")
    common(p, sampling=False)

    p = sub.add_parser("monotone", help="exact stochastic-monotonicity suite")
    p.add_argument("--n", type=int, default=5, help="max box count checked")
    p.add_argument("--max-m", type=int, default=8)
    common(p, sampling=False)

    p = sub.add_parser("cwold", help="characteristic-function octant scan")
    p.add_argument("--grid", type=float, default=cwold.DEFAULT_GRID_STEP)
    p.add_argument("--T", type=float, default=cwold.DEFAULT_GRID_EXTENT)
    common(p, sampling=False)

    return parser


def _theory_for(model: str, args) -> tuple[np.ndarray, np.ndarray]:
    if model == "spacings":
        residual = limit_theory.spacings_limit_constants(args.a).residual
        return np.zeros(1), np.array([[residual]])
    lam = mc_engine.model_lambda_n(model, vars(args))
    theory_model = {"alloc": limit_theory.ALLOC, "gnp": limit_theory.GNP,
                    "gnm": limit_theory.GNM}[model]
    mat = limit_theory.theory_cov_matrix(theory_model, lam, args.max_k).matrix
    return np.zeros(args.max_k + 1), mat


def _run_sampling_experiment(args) -> mc_engine.VerificationReport:
    model = args.experiment
    params = {"n": args.n}
    if model == "alloc" or model == "gnm":
        params["m"] = args.m
        params["max_k"] = args.max_k
    elif model == "gnp":
        params["p"] = args.p
        params["max_k"] = args.max_k
    else:
        params["a"] = args.a
    run = mc_engine.run_experiment(model, params, args.reps, args.seed,
                                   workers=args.workers, dump_path=args.dump)
    theory_mean, theory_cov = _theory_for(model, args)
    report = mc_engine.compare_to_theory(run, theory_mean, theory_cov,
                                         z_gate=args.z_gate)
    report.ks_gate = args.ks_gate
    if run.reps >= 1000:
        for i in range(run.samples.shape[1]):
            sigma2 = theory_cov[i, i]
            if sigma2 <= 0:
                continue
            dist = mc_engine.normality_distance(run.samples[:, i], 0.0, sigma2)
            report.normality.append({"index": i, "distance": dist, "gate": args.ks_gate})
        if any(e["distance"] > args.ks_gate for e in report.normality):
            report.passed = False
    return report


def _run_transfer(args) -> mc_engine.VerificationReport:
    start = time.perf_counter()
    conditioned = limit_theory.gnm_cov_via_conditioning(args.lam, args.K)
    target = limit_theory.theory_cov_matrix(limit_theory.GNM, args.lam, args.K).matrix
    max_dev = float(np.abs(conditioned - target).max())
    report = mc_engine.VerificationReport(
        experiment="transfer", params={"lam": args.lam, "K": args.K},
        seed=args.seed, z_gate=0.0, ks_gate=0.0,
    )
    report.entries.append(mc_engine.ComparisonEntry(
        "cov", -1, -1, 0.0, max_dev, 1e-10, max_dev / 1e-10))
    report.passed = max_dev < 1e-10
    report.wall_time = time.perf_counter() - start
    return report


def _run_monotone(args) -> mc_engine.VerificationReport:
    start = time.perf_counter()
    report = mc_engine.VerificationReport(
        experiment="monotone", params={"n": args.n, "max_m": args.max_m},
        seed=args.seed, z_gate=0.0, ks_gate=0.0,
    )
    ok = True
    for n in range(2, args.n + 1):
        prev = None
        for m in range(args.max_m + 1):
            law = monotone.exact_empty_box_law(n, m)
            if prev is not None:
                holds, _ = monotone.check_stochastic_dominance(law, prev)
                coupled = bool(monotone.quantile_coupling(law, prev))
                ok = ok and holds and coupled
                report.entries.append(mc_engine.ComparisonEntry(
                    "mean", n, m, 1.0, 1.0 if (holds and coupled) else 0.0, 0.0,
                    0.0 if (holds and coupled) else math.inf))
            prev = law
    report.passed = ok
    report.wall_time = time.perf_counter() - start
    return report


def _run_cwold(args) -> mc_engine.VerificationReport:
    start = time.perf_counter()
    cf_x, cf_y = cwold.canonical_pair()
    octant_max, _ = cwold.octant_equality_scan(cf_x, cf_y, h=args.grid, extent=args.T)
    point_diff = abs(cwold.eval_cf(cf_x, (-0.6, 0.6)) - cwold.eval_cf(cf_y, (-0.6, 0.6)))
    _, witness_diff = cwold.counterexample_witness(cf_x, cf_y, h=args.grid, extent=args.T)
    report = mc_engine.VerificationReport(
        experiment="cwold", params={"grid": args.grid, "T": args.T},
        seed=args.seed, z_gate=0.0, ks_gate=0.0,
    )
    report.entries.append(mc_engine.ComparisonEntry(
        "cov", 0, 0, 0.0, octant_max, 1e-12, octant_max / 1e-12))
    report.entries.append(mc_engine.ComparisonEntry(
        "cov", 0, 1, 0.2, float(point_diff), 1e-12, (float(point_diff) - 0.2) / 1e-12))
    report.entries.append(mc_engine.ComparisonEntry(
        "cov", 1, 1, witness_diff, witness_diff, 0.0, 0.0))
    report.passed = (octant_max < 1e-12 and abs(point_diff - 0.2) < 1e-12
                     and witness_diff >= 0.19)
    report.wall_time = time.perf_counter() - start
    return report


def emit_report(report: mc_engine.VerificationReport, out_path=None, table_path=None):
    """Write the structured (JSON) report and the flat CSV comparison table."""
    if out_path:
        with open(out_path, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
    if table_path:
        with open(table_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TABLE_HEADER)
            for e in report.entries:
                writer.writerow([report.experiment, e.i, e.j,
                                 repr(e.theory), repr(e.estimate),
                                 repr(e.stderr), repr(e.z)])


def parse_report(path: str) -> mc_engine.VerificationReport:
    with open(path) as fh:
        return mc_engine.VerificationReport.from_dict(json.load(fh))


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_defaults(parser, argv)
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return EXIT_CONFIG_ERROR if exc.code not in (0, None) else 0
        # Config-file values arrive as strings; coerce through each action type.
        for action in parser._actions + sum(
            [list(s._actions) for s in
             (parser._subparsers._group_actions[0].choices.values()
              if parser._subparsers else [])], []):
            if action.dest and hasattr(args, action.dest) and action.type:
                val = getattr(args, action.dest)
                if isinstance(val, str):
                    setattr(args, action.dest, action.type(val))
    except ConfigError as exc:
        print(f"condclt: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    try:
        if args.experiment in mc_engine.EXPERIMENT_MODELS:
            report = _run_sampling_experiment(args)
        elif args.experiment == "transfer":
            report = _run_transfer(args)
        elif args.experiment == "monotone":
            report = _run_monotone(args)
        else:
            report = _run_cwold(args)
        emit_report(report, args.out, args.table)
    except (CondCltError, OSError) as exc:
        print(f"condclt: numeric/IO error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC_ERROR

    status = "PASS" if report.passed else "FAIL"
    print(f"{args.experiment}: {status} (max |z| = {report.max_abs_z():.3f}, "
          f"wall = {report.wall_time:.2f}s, seed = {report.seed})")
    return EXIT_OK if report.passed else EXIT_GATE_FAILURE


if __name__ == "__main__":
    sys.exit(main())
