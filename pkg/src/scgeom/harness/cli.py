"""Command-line entry point.

Exit codes: 0 all selected suites passed, 1 some suite failed, 2 scenario
configuration error.
"""

from __future__ import annotations

import argparse
import sys
import time

from .report import build_report, emit_report, report_body_text
from .scenario import ScenarioError, load_scenario
from .suites import CLAIMS, SUITES, run_suites


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scgeom",
        description="Run scale-calculus verification suites on a scenario file.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run suites from a scenario file")
    run.add_argument("scenario", help="path to the scenario JSON document")
    run.add_argument("--suite", action="append", default=None,
                     help="suite name filter; repeatable")
    run.add_argument("--tol", type=float, default=None,
                     help="override the zero tolerance tau_zero")
    run.add_argument("--seed", type=int, default=None,
                     help="override the scenario seed")
    run.add_argument("--report", default=None,
                     help="write the machine-readable report to this path")
    mode = run.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true",
                      help="force exact rational arithmetic")
    mode.add_argument("--float", dest="float_mode", action="store_true",
                      help="force double-precision arithmetic")
    run.add_argument("--jobs", type=int, default=1,
                     help="run suites in parallel up to this bound")

    sub.add_parser("list-suites", help="print the suite registry with claims")
    return parser


def cmd_list_suites() -> int:
    print(f"{len(SUITES)} suites registered:")
    for name in sorted(SUITES):
        print(f"  {name:20s} {CLAIMS[name]}")
    return 0


def cmd_run(args) -> int:
    arithmetic = "exact" if args.exact else ("float" if args.float_mode else None)
    try:
        scen = load_scenario(args.scenario, seed=args.seed,
                             arithmetic=arithmetic, tol=args.tol)
        selected = args.suite
        if selected:
            unknown = [s for s in selected if s not in SUITES]
            if unknown:
                raise ScenarioError("--suite", f"unknown suites {unknown}")
    except ScenarioError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    results = run_suites(scen, selected, jobs=max(args.jobs, 1))
    timing = {"total_s": time.perf_counter() - t0}
    report = build_report(scen, results, timing)
    for name, r in results.items():
        status = "PASS" if r.passed else "FAIL"
        extra = f"  ({r.error})" if r.error else ""
        print(f"[{status}] {name}{extra}")
    ok = report["passed"]
    print(f"{'all suites passed' if ok else 'FAILURES present'} "
          f"[scenario {report['scenario_hash'][:18]}..., seed {scen.seed}, "
          f"{scen.arithmetic} mode]")
    if args.report:
        emit_report(report, args.report)
        print(f"report written to {args.report}")
    return 0 if ok else 1


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if args.command == "list-suites":
        return cmd_list_suites()
    return cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())
