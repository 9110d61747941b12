"""Pipeline driver: load, approximate, flatten, solve, report.

Exit codes: 0 optimal/feasible, 2 infeasible, 3 time or node budget
exhausted, 1 usage or data errors. The report is machine-readable JSON;
two single-worker runs on the same inputs differ only in timing fields.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .approx import ApproxPolicy, apply_approximation
from .bnb import solve_global
from .model import load_model
from .transforms import bigm_transform
from .wtn import build_wtn_gdp, load_wtn_data, relative_error

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_LIMIT = 3

_STATUS_EXIT = {
    "optimal": EXIT_OK,
    "feasible": EXIT_OK,
    "infeasible": EXIT_INFEASIBLE,
    "time_limit": EXIT_LIMIT,
    "unknown": EXIT_LIMIT,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="gdpkit",
        description="Approximate, flatten and globally solve a disjunctive "
                    "model or a water treatment network instance.")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", metavar="PATH", help="model file (JSON schema)")
    src.add_argument("--wtn", metavar="PATH", help="network instance file")
    p.add_argument("--approx", choices=["none", "quad", "pwl"], default="none",
                   help="strategy for power/log terms (default: none)")
    p.add_argument("--segments", type=int, default=101,
                   help="piecewise segments per term (default: 101)")
    p.add_argument("--gap", type=float, default=1e-4,
                   help="relative optimality gap (default: 1e-4)")
    p.add_argument("--time-limit", type=float, default=3600.0,
                   help="wall clock budget in seconds (default: 3600)")
    p.add_argument("--reference", type=float, default=None,
                   help="reference objective for the relative error field")
    p.add_argument("--workers", type=int, default=1,
                   help="node workers (default: 1)")
    p.add_argument("--out", metavar="PATH", default=None,
                   help="write the report here instead of stdout")
    return p


def _fail(message: str) -> int:
    print(f"gdpkit: error: {message}", file=sys.stderr)
    return EXIT_USAGE


def run_pipeline(args: argparse.Namespace) -> int:
    try:
        if args.wtn:
            source = args.wtn
            gdp = build_wtn_gdp(load_wtn_data(args.wtn))
        else:
            source = args.model
            gdp = load_model(Path(args.model).read_text())
    except FileNotFoundError as exc:
        return _fail(f"cannot read {exc.filename!r}")
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        return _fail(str(exc))

    report_check = gdp.validate()
    if not report_check.ok:
        return _fail("invalid model: " + "; ".join(report_check.problems))

    original_flat = bigm_transform(gdp)
    approx_report: list[dict] = []
    if args.approx == "none":
        exprs = [original_flat.objective] + [c.body for c in original_flat.constraints]
        if any(e.powers or e.logs for e in exprs):
            return _fail("model still carries power/log terms; pick "
                         "--approx quad or --approx pwl")
        flat = original_flat
    else:
        policy = ApproxPolicy(method=args.approx, n_segments=args.segments)
        approximated, approx_report = apply_approximation(gdp, policy)
        flat = bigm_transform(approximated)

    result = solve_global(flat, gap=args.gap, time_limit=args.time_limit,
                          workers=args.workers)

    incumbent = None
    if result.x is not None:
        incumbent = {v.name: float(result.x[v.id]) for v in flat.variables}

    report = {
        "input": source,
        "pipeline": {
            "approx": args.approx,
            "segments": args.segments if args.approx == "pwl" else None,
            "gap": args.gap,
            "time_limit": args.time_limit,
            "workers": args.workers,
        },
        "sizes": {
            "original": original_flat.counts(),
            "solved": flat.counts(),
        },
        "approximation": approx_report,
        "result": {
            "status": result.status,
            "objective": result.objective,
            "bound": result.bound,
            "relative_gap": result.gap,
            "nodes": result.nodes,
            "wall_time_s": result.wall_time,
            "incumbent": incumbent,
        },
    }
    if args.reference is not None and result.objective is not None:
        report["relative_error_pct"] = relative_error(result.objective,
                                                      args.reference)

    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return _STATUS_EXIT.get(result.status, EXIT_LIMIT)


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(message)s")
    args = build_parser().parse_args(argv)
    return run_pipeline(args)


if __name__ == "__main__":
    raise SystemExit(main())
