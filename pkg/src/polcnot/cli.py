"""``polcnot`` command line."""

from __future__ import annotations

import argparse
import sys

from .runner import EXIT_IO, EXIT_OK, EXIT_PARSE, override, run_scenario
from .scenario import RUN_KINDS, ScenarioError, parse_scenario, runnable_problems


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polcnot", description="Optical CNOT cell bench simulator")
    parser.add_argument("subcommand", choices=("check",) + RUN_KINDS)
    parser.add_argument("scenario", help="scenario file ('-' reads standard input)")
    parser.add_argument("--seed", type=int, help="override the [mc] seed")
    parser.add_argument("--out", help="override the [output] directory")
    parser.add_argument("--tolerance", type=float, help="truth-table tolerance in rad")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.scenario == "-":
            text = sys.stdin.read()
        else:
            with open(args.scenario, encoding="utf-8") as fh:
                text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        print(f"polcnot: cannot read {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        scenario = parse_scenario(text)
    except ScenarioError as exc:
        for d in exc.diagnostics:
            print(f"{args.scenario}:{d}", file=sys.stderr)
        return EXIT_PARSE

    if args.seed is not None and args.seed < 0:
        print("polcnot: --seed must be non-negative", file=sys.stderr)
        return EXIT_PARSE
    if args.tolerance is not None and not args.tolerance > 0:
        print("polcnot: --tolerance must be positive", file=sys.stderr)
        return EXIT_PARSE

    if args.subcommand == "check":
        print(f"{args.scenario}: ok (run kind {scenario.run.kind})")
        return EXIT_OK

    problems = runnable_problems(scenario, args.subcommand)
    if problems:
        for msg in problems:
            print(f"{args.scenario}: error: {msg}", file=sys.stderr)
        return EXIT_PARSE

    scenario = override(scenario, args.subcommand, args.seed, args.out, args.tolerance)
    report = run_scenario(scenario)
    sys.stdout.write(report.summary_text())
    for path in report.files:
        print(f"wrote {path}")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
