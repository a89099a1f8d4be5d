"""Command-line driver: ``python -m inplace_upgrade {run,gas-report,diff-layout}``."""

from __future__ import annotations

import argparse
import json
import sys

from .analyzer import AnalyzerError, diff_layouts
from .gas import GasSchedule
from .scenario import (
    EXIT_OK,
    EXIT_PARSE,
    NoUpgradeInScenario,
    ParseError,
    gas_report,
    run_scenario,
    scenario_paths,
)
from .storage import StorageError, load_layout


def _schedule(path: str | None) -> GasSchedule | None:
    if path is None:
        return None
    with open(path) as f:
        obj = json.load(f)
    return GasSchedule.from_overrides(obj.get("gas_schedule", obj))


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    report = run_scenario(args.scenario, _schedule(args.schedule))
    sys.stdout.write(report.render())
    if args.out:
        _emit(report.dumps(), args.out)
    if report.failures:
        for f in report.failures:
            print(f"assertion failed at step {f.index}: {f.op} {f.detail or ''}", file=sys.stderr)
    return report.exit_code


def cmd_gas_report(args) -> int:
    report = gas_report(scenario_paths(args.targets), _schedule(args.schedule))
    if args.csv:
        _emit(report.csv(), args.csv)
    else:
        sys.stdout.write(report.csv())
    sys.stdout.write(report.render_summary())
    if args.out:
        _emit(json.dumps({"rows": report.rows, "summary": report.summary()}, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_diff_layout(args) -> int:
    old, new = load_layout(args.old), load_layout(args.new)
    dropped = [n for n in (args.dropped or "").split(",") if n]
    plan = diff_layouts(old, new, dropped)
    _emit(json.dumps(plan.to_json(), indent=2) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--schedule", help="JSON file with gas schedule overrides")
    common.add_argument("--out", help="write the machine-readable result here")

    parser = argparse.ArgumentParser(prog="inplace-upgrade", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("gas-report", parents=[common], help="reorganization vs. baseline gas for scenarios")
    p.add_argument("targets", nargs="+", help="scenario files or directories")
    p.add_argument("--csv", help="write the CSV table here instead of stdout")
    p.set_defaults(func=cmd_gas_report)

    p = sub.add_parser("diff-layout", parents=[common], help="print the reorganization plan between two layouts")
    p.add_argument("old")
    p.add_argument("new")
    p.add_argument("--dropped", help="comma-separated names whose data is discarded")
    p.set_defaults(func=cmd_diff_layout)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, NoUpgradeInScenario, AnalyzerError, StorageError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
