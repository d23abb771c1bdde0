"""Command-line interface: ``warpmeas <kind> [--scenario FILE] [options]``.

Exit codes: 0 when every check passes, 1 when some check fails, 2 for
scenario errors (missing file, schema violation, inputs that break a
precondition), 3 when a composite space would exceed ``--max-dim``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import CapacityError, ContractViolation, PeriodizationError, SchemaError
from .linalg import MAX_COMPOSITE_DIM
from .report import FORMATS, emit_report, render
from .scenario import KINDS, Scenario, parse_scenario, scenario_from_dict
from .suites import run_scenario

EXIT_OK, EXIT_FAILED, EXIT_SCHEMA, EXIT_CAPACITY = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="warpmeas",
        description="Verify measurement-scheme and deformation identities and emit reports.",
    )
    sub = parser.add_subparsers(dest="kind", required=True, metavar="KIND")
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} suite")
        p.add_argument("--scenario", type=Path, help="scenario JSON file (defaults apply when omitted)")
        p.add_argument("--seed", type=int, help="override the scenario seed (unsigned 64-bit)")
        p.add_argument("--out", type=Path, help="report path; stdout when neither this nor the scenario sets one")
        p.add_argument("--format", choices=FORMATS, default="json")
        p.add_argument("--max-dim", type=int, default=MAX_COMPOSITE_DIM, help="largest composite dimension")
        p.add_argument("--timings", action="store_true", help="include wall-clock timings in JSON output")
    return parser


def _load(args) -> Scenario:
    if args.scenario is None:
        s = scenario_from_dict({"kind": args.kind})
    else:
        s = parse_scenario(args.scenario)
        if s.kind != args.kind:
            raise SchemaError(f"kind: scenario is {s.kind!r} but subcommand is {args.kind!r}")
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise SchemaError("seed: must be an unsigned 64-bit integer")
        s = Scenario(s.kind, args.seed, s.parameters, s.output)
    return s


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = _load(args)
        report = run_scenario(scenario, max_dim=args.max_dim)
    except CapacityError as exc:
        print(f"warpmeas: capacity error in {args.kind}: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (SchemaError, ContractViolation, PeriodizationError) as exc:
        print(f"warpmeas: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    out = args.out if args.out is not None else scenario.output
    if out is None:
        sys.stdout.write(render(report, args.format, args.timings))
    else:
        try:
            emit_report(report, args.format, out, args.timings)
        except OSError as exc:
            print(f"warpmeas: cannot write report: {exc}", file=sys.stderr)
            return EXIT_SCHEMA
    return EXIT_OK if report.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
