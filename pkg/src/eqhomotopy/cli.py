"""Command-line front end.

    eqhomotopy solve --builtin ex1 --start 0.5,0.5 --start 0.1,0.9
    eqhomotopy trace --builtin ex4 --out path.csv
    eqhomotopy validate model.json
    eqhomotopy export --builtin ex3 --out ex3.json

Exit codes: 0 success, 1 input error (or failed validation), 2 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from .catalog import BUILTIN_IDS, builtin_example
from .economy import (
    NO_NORMALIZATION,
    REPLACE_LAST_ROW,
    ModelError,
    compile_model,
    compute_equilibrium,
    excess_demand,
    known_vector,
)
from .modelfile import dump_model, load_model
from .ncp import EvaluationError, ncp_residual
from .tracer import NoConvergenceError, TraceConfig

log = logging.getLogger("eqhomotopy")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_CONVERGENCE = 2

CERTIFY_TOL = 2e-3
VALIDATION_SAMPLES = 10


class InputError(Exception):
    pass


def _positive_vector(text: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None
    if not values or any(not (v > 0 and np.isfinite(v)) for v in values):
        raise argparse.ArgumentTypeError(f"start coordinates must be positive reals: {text!r}")
    return values


def _add_model_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", choices=BUILTIN_IDS, help="use a builtin example economy")
    src.add_argument("--model", type=Path, help="JSON model file")


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    _add_model_args(p)
    p.add_argument("--start", type=_positive_vector, action="append", default=None,
                   help="comma-separated positive start prices (repeatable; default all ones)")
    p.add_argument("--eps-lambda", type=float, default=1e-6)
    p.add_argument("--eps-res", type=float, default=1e-5)
    p.add_argument("--h0", type=float, default=0.3)
    p.add_argument("--max-it", type=int, default=1000)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--normalization", choices=(REPLACE_LAST_ROW, NO_NORMALIZATION), default=None)
    p.add_argument("--no-polish", action="store_true", help="skip the final Newton polish at lambda = 0")
    p.add_argument("--jobs", type=int, default=1, help="run start points concurrently")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eqhomotopy", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="compute equilibria")
    _add_solver_args(p)
    p.add_argument("--json", type=Path, help="write structured results here")
    p.add_argument("--trace-csv", type=Path, help="write the accepted path points here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("trace", help="dump the solution path as CSV")
    _add_solver_args(p)
    p.add_argument("--out", "--trace-csv", dest="trace_csv", type=Path, required=True)
    p.set_defaults(func=cmd_trace_dump, json=None)

    p = sub.add_parser("validate", help="check a model file")
    p.add_argument("path", type=Path)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("export", help="write a builtin economy as a model file")
    p.add_argument("--builtin", choices=BUILTIN_IDS, required=True)
    p.add_argument("--out", type=Path, help="output path (default: stdout)")
    p.set_defaults(func=cmd_export)
    return parser


def _load(args):
    if args.builtin:
        return builtin_example(args.builtin)
    try:
        return load_model(args.model)
    except OSError as exc:
        raise InputError(f"cannot read model file: {exc}") from None
    except ModelError as exc:
        raise InputError(f"{args.model}: {exc}") from None


def _config(args) -> TraceConfig:
    try:
        return TraceConfig(
            eps_lambda=args.eps_lambda,
            eps_residual=args.eps_res,
            h0=args.h0,
            h_max=max(0.5, args.h0),
            max_iterations=args.max_it,
            restart_max=args.restarts,
            rng_seed=args.seed,
            final_polish=not args.no_polish,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _starts(args, model) -> List[Optional[np.ndarray]]:
    if not args.start:
        return [None]
    allowed = {model.goods, model.goods + model.activities}
    for s in args.start:
        if len(s) not in allowed:
            raise InputError(f"start {s} has {len(s)} entries; expected one of {sorted(allowed)}")
    return [np.array(s) for s in args.start]


def _fmt(values) -> str:
    return " ".join(f"{v:.4f}" for v in values)


def _run_all(model, starts, cfg, normalization, jobs):
    def one(start):
        try:
            return compute_equilibrium(model, start, cfg, normalization), None
        except NoConvergenceError as exc:
            return None, exc

    if jobs > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, starts))
    return [one(s) for s in starts]


def _print_run(k, start, report, err, out=None):
    out = out or sys.stdout
    label = "all ones" if start is None else "(" + ", ".join(f"{v:g}" for v in start) + ")"
    print(f"run {k}: start {label}", file=out)
    if err is not None:
        print(f"  status      no convergence (best residual {err.best_residual:.3e}, {err.attempts} attempts)", file=out)
        return
    print("  status      converged", file=out)
    print(f"  prices      {_fmt(report.prices)}", file=out)
    if report.activities is not None:
        print(f"  activities  {_fmt(report.activities)}", file=out)
    print(f"  residual    {report.complementarity_residual:.3e}", file=out)
    print(f"  iterations  {report.iterations}", file=out)
    print(f"  restarts    {report.restarts}", file=out)
    print(f"  matched     {report.matched_known_equilibrium or '-'}", file=out)
    for w in report.warnings:
        print(f"  warning     {w}", file=out)


def write_trace_csv(path: Path, trace) -> None:
    n2 = trace.endpoint.n * 2
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "lambda", "residual", "steplength"] + [f"x{i + 1}" for i in range(n2)])
        for i, rec in enumerate(trace.path_log, start=1):
            writer.writerow([i, repr(rec.lam), repr(rec.residual), repr(rec.steplength)]
                            + [repr(float(v)) for v in rec.point[:n2]])


def _csv_path(base: Path, k: int, total: int) -> Path:
    if total == 1:
        return base
    return base.with_name(f"{base.stem}-{k}{base.suffix}")


def cmd_solve(args) -> int:
    model = _load(args)
    cfg = _config(args)
    starts = _starts(args, model)
    results = _run_all(model, starts, cfg, args.normalization, max(1, args.jobs))

    runs = []
    for k, (start, (report, err)) in enumerate(zip(starts, results), start=1):
        _print_run(k, start, report, err)
        entry = {"start": None if start is None else [float(v) for v in start]}
        if err is None:
            entry.update(status="converged", **report.as_dict())
            if args.trace_csv:
                write_trace_csv(_csv_path(args.trace_csv, k, len(starts)), report.trace)
        else:
            entry.update(status="no_convergence", best_residual=float(err.best_residual), attempts=err.attempts)
        runs.append(entry)

    if args.json:
        payload = {
            "model": args.builtin or str(args.model),
            "config": {
                "eps_lambda": cfg.eps_lambda,
                "eps_residual": cfg.eps_residual,
                "h0": cfg.h0,
                "max_iterations": cfg.max_iterations,
                "restart_max": cfg.restart_max,
                "rng_seed": cfg.rng_seed,
                "final_polish": cfg.final_polish,
                "normalization": args.normalization or NO_NORMALIZATION,
            },
            "runs": runs,
        }
        args.json.write_text(json.dumps(payload, indent=2) + "\n")
    return EXIT_OK if all(err is None for _, err in results) else EXIT_NO_CONVERGENCE


def cmd_trace_dump(args) -> int:
    if args.start and len(args.start) > 1:
        raise InputError("trace takes at most one --start")
    return cmd_solve(args)


def cmd_validate(args) -> int:
    try:
        model = load_model(args.path)
    except OSError as exc:
        raise InputError(f"cannot read model file: {exc}") from None
    except ModelError as exc:
        print(f"FAIL parse: {exc}")
        return EXIT_INPUT
    print(f"ok   parse: {model.goods} goods, {len(model.consumers)} consumers, {model.activities} activities")

    rng = np.random.default_rng(args.seed)
    walras, homog = 0.0, 0.0
    for _ in range(VALIDATION_SAMPLES):
        p = rng.uniform(0.1, 2.0, model.goods)
        xi = excess_demand(model, p)
        walras = max(walras, abs(float(p @ xi)) / (1.0 + np.abs(xi).sum()))
        c = rng.uniform(0.1, 10.0)
        homog = max(homog, float(np.max(np.abs(excess_demand(model, c * p) - xi)) / (1.0 + np.abs(xi).max())))
    checks = [
        ("walras law", walras <= 1e-9, f"max scaled |p.xi(p)| = {walras:.2e}"),
        ("homogeneity", homog <= 1e-9, f"max scaled |xi(cp) - xi(p)| = {homog:.2e}"),
    ]

    problem = compile_model(model, NO_NORMALIZATION)
    for k, eq in enumerate(model.known_equilibria):
        name = eq.label or f"#{k + 1}"
        try:
            r = ncp_residual(problem, known_vector(model, eq))
            checks.append((f"equilibrium {name}", r <= CERTIFY_TOL, f"ncp residual {r:.2e}"))
        except EvaluationError as exc:
            checks.append((f"equilibrium {name}", False, f"cannot evaluate: {exc}"))

    for name, ok, detail in checks:
        print(f"{'ok  ' if ok else 'FAIL'} {name}: {detail}")
    passed = all(ok for _, ok, _ in checks)
    print("PASS" if passed else "FAIL")
    return EXIT_OK if passed else EXIT_INPUT


def cmd_export(args) -> int:
    text = dump_model(builtin_example(args.builtin), args.out)
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.WARNING - 10 * min(getattr(args, "verbose", 0), 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
