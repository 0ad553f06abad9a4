"""Command-line interface: run solves, generate and validate schedules,
verify candidate solutions, and compare traces.

Exit codes: 0 solved/valid, 1 I/O or schema error, 2 iteration budget
exhausted, 3 validation failure, 4 inconsistency/infeasibility signal.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from . import fileio
from .engine import run
from .errors import InconsistencyError, PdsplitError, SchemaError
from .schedule import periodic, random_admissible, validate
from .separator import kt_residual

EXIT_OK = 0
EXIT_IO = 1
EXIT_MAX_ITER = 2
EXIT_INVALID = 3
EXIT_INCONSISTENT = 4

_STATUS_EXIT = {"solved": EXIT_OK, "exact_point": EXIT_OK,
                "max_iter": EXIT_MAX_ITER, "inconsistent": EXIT_INCONSISTENT}


def _cmd_run(args) -> int:
    problem = fileio.parse_problem(args.problem)
    config = fileio.parse_config(args.config)
    sched = fileio.parse_schedule(args.schedule) if args.schedule else None
    result = run(problem, config, sched)
    fileio.write_trace(result.trace, args.trace, len(problem.known_Z_points))
    summary = {"status": result.status, "iterations": result.iterations,
               "message": result.message, "metadata": result.metadata,
               "final": {"x": [b.tolist() for b in result.final.x.blocks],
                         "v_star": [b.tolist() for b in result.final.v_star.blocks]}}
    if result.trace:
        summary["final_residual_sum"] = result.trace[-1].residual_sum()
    print(json.dumps(summary, indent=1))
    return _STATUS_EXIT[result.status]


def _cmd_validate_schedule(args) -> int:
    sched = fileio.parse_schedule(args.schedule)
    cert = validate(sched, args.m, args.p)
    if cert.certified:
        print(f"certified: M={sched.M} D={sched.D} horizon={sched.horizon}")
        return EXIT_OK
    where = "" if cert.at is None else f" at n={cert.at}"
    print(f"violation: {cert.reason}{where}")
    return EXIT_INVALID


def _cmd_check_kt(args) -> int:
    problem = fileio.parse_problem(args.problem)
    point = fileio.parse_point(args.point)
    res = kt_residual(problem, point)
    for i, v in enumerate(res.primal):
        print(f"primal[{i}]: {v:.6e}")
    for k, v in enumerate(res.dual):
        print(f"dual[{k}]: {v:.6e}")
    print(f"max: {res.max:.6e} (tol {args.tol:.6e})")
    return EXIT_OK if res.max <= args.tol else EXIT_INVALID


def _cmd_compare(args) -> int:
    if args.tol == 0.0:
        with open(args.trace_a, "rb") as fa, open(args.trace_b, "rb") as fb:
            lines_a = fa.read().split(b"\n")
            lines_b = fb.read().split(b"\n")
        for row, (la, lb) in enumerate(zip(lines_a, lines_b)):
            if la != lb:
                print(f"diverges at row {row}")
                return EXIT_INVALID
        if len(lines_a) != len(lines_b):
            print(f"diverges at row {min(len(lines_a), len(lines_b))}: length mismatch")
            return EXIT_INVALID
        print("identical")
        return EXIT_OK
    header_a, rows_a = fileio.read_trace(args.trace_a)
    header_b, rows_b = fileio.read_trace(args.trace_b)
    if header_a != header_b:
        print("diverges at row 0: header mismatch")
        return EXIT_INVALID
    for idx, (ra, rb) in enumerate(zip(rows_a, rows_b), start=1):
        for col, (va, vb) in enumerate(zip(ra, rb)):
            if abs(va - vb) > args.tol:
                print(f"diverges at row {idx}, column {header_a[col]}: "
                      f"{va:.17g} vs {vb:.17g}")
                return EXIT_INVALID
    if len(rows_a) != len(rows_b):
        print(f"diverges at row {min(len(rows_a), len(rows_b)) + 1}: length mismatch")
        return EXIT_INVALID
    print(f"equal within {args.tol:g}")
    return EXIT_OK


def _cmd_gen_schedule(args) -> int:
    if args.type == "periodic":
        if args.lag_pattern == "zero":
            lag = ("zero",)
        elif args.lag_pattern == "constant":
            lag = ("constant", args.lag_value)
        else:
            lag = ("sawtooth", args.lag_value)
        sched = periodic(args.m, args.p, args.group_size, args.horizon, lag)
    else:
        sched = random_admissible(args.m, args.p, args.M, args.D, args.horizon, args.seed)
    fileio.write_schedule(sched, args.out)
    print(f"wrote {args.out}: M={sched.M} D={sched.D} horizon={sched.horizon}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdsplit",
        description="Block-iterative primal-dual splitting solver for coupled "
                    "monotone inclusions")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="solve a problem and write the iteration trace")
    p_run.add_argument("--problem", required=True)
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--schedule", default=None,
                       help="schedule file (default: synchronous)")
    p_run.add_argument("--trace", required=True, help="output CSV path")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate-schedule", help="certify a schedule file")
    p_val.add_argument("--schedule", required=True)
    p_val.add_argument("--m", type=int, required=True)
    p_val.add_argument("--p", type=int, required=True)
    p_val.set_defaults(func=_cmd_validate_schedule)

    p_kt = sub.add_parser("check-kt", help="verify a candidate solution pair")
    p_kt.add_argument("--problem", required=True)
    p_kt.add_argument("--point", required=True)
    p_kt.add_argument("--tol", type=float, required=True)
    p_kt.set_defaults(func=_cmd_check_kt)

    p_cmp = sub.add_parser("compare", help="compare two trace files")
    p_cmp.add_argument("--trace-a", required=True)
    p_cmp.add_argument("--trace-b", required=True)
    p_cmp.add_argument("--tol", type=float, required=True,
                       help="0 means byte equality")
    p_cmp.set_defaults(func=_cmd_compare)

    p_gen = sub.add_parser("gen-schedule", help="generate a certified schedule file")
    p_gen.add_argument("--type", choices=("periodic", "random"), required=True)
    p_gen.add_argument("--m", type=int, required=True)
    p_gen.add_argument("--p", type=int, required=True)
    p_gen.add_argument("--horizon", type=int, default=256)
    p_gen.add_argument("--group-size", type=int, default=1)
    p_gen.add_argument("--lag-pattern", choices=("zero", "constant", "sawtooth"),
                       default="zero")
    p_gen.add_argument("--lag-value", type=int, default=0)
    p_gen.add_argument("--M", type=int, default=1)
    p_gen.add_argument("--D", type=int, default=0)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=_cmd_gen_schedule)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InconsistencyError as exc:
        print(f"inconsistency: {exc}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except PdsplitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
