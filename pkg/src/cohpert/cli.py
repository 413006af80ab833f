"""Command-line interface.

Verbs:
  scenario <name>   run a named scenario with optional flag overrides
  check <config>    run one criterion on a channel + family JSON config
  scan <config>     run a scenario described entirely by a JSON config

Exit status reflects execution health (0 = clean completion) regardless of
the scientific verdicts in the emitted reports.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Sequence

from .scenarios import (
    CSV_SCHEMAS,
    SCENARIOS,
    GridSpec,
    ScenarioConfig,
    run_custom,
    run_scenario,
)

_SCHEMA_HELP = "CSV column schemas:\n" + "\n".join(
    f"  {name}: {schema}" for name, schema in sorted(CSV_SCHEMAS.items())
)


def _parse_grid(text: str) -> GridSpec:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"grid must be lo:hi:steps, got {text!r}")
    try:
        return GridSpec(float(parts[0]), float(parts[1]), int(parts[2]))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _parse_kv(pairs: Sequence[str], cast=float) -> dict:
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise argparse.ArgumentTypeError(f"expected key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        try:
            out[key] = cast(value)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"bad value in {pair!r}: {exc}") from exc
    return out


def _default_jobs() -> int:
    env = os.environ.get("COHPERT_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            print(f"warning: ignoring non-integer COHPERT_JOBS={env!r}", file=sys.stderr)
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cohpert",
        description="Coherent-information perturbation analysis for quantum channels.",
        epilog=_SCHEMA_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sc = sub.add_parser(
        "scenario",
        help="run a named scenario",
        epilog=_SCHEMA_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sc.add_argument("name", choices=[s for s in SCENARIOS if s != "custom"])
    sc.add_argument("--grid", type=_parse_grid, default=None, metavar="LO:HI:STEPS")
    sc.add_argument("--out", default=".", metavar="DIR", help="output directory")
    sc.add_argument("--seed", type=int, default=0)
    sc.add_argument("--format", choices=["csv", "json", "both"], default="both")
    sc.add_argument("--jobs", type=int, default=None, metavar="N",
                    help="parallel grid evaluations (default: COHPERT_JOBS or 1)")
    sc.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                    help="channel parameter override (repeatable)")
    sc.add_argument("--tol", action="append", default=[], metavar="KEY=VALUE",
                    help="tolerance override (repeatable)")

    ck = sub.add_parser("check", help="run one criterion from a JSON config")
    ck.add_argument("config", help="JSON file with channel, family, criterion, sense")

    sn = sub.add_parser("scan", help="run a scenario from a JSON config")
    sn.add_argument("config", help="JSON file with a full scenario config")

    return parser


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise SystemExit(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise SystemExit(f"invalid JSON in {path} (line {exc.lineno}, column {exc.colno}): {exc.msg}")


_TUNABLE_TOLERANCES = (
    "KERNEL_TOL",
    "DECISION_TOL",
    "FIRST_ORDER_TOL",
    "NUMERIC_MARGIN",
    "PSD_TOL",
    "CPTP_TOL",
)


def _apply_tolerance_overrides(pairs: Sequence[str]) -> None:
    from . import tolerances

    overrides = _parse_kv(pairs)
    for key, value in overrides.items():
        name = key.upper()
        if name not in _TUNABLE_TOLERANCES:
            raise SystemExit(
                f"unknown tolerance {key!r}; tunable: "
                + ", ".join(t.lower() for t in _TUNABLE_TOLERANCES)
            )
        setattr(tolerances, name, value)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        if args.command == "scenario":
            if args.tol:
                _apply_tolerance_overrides(args.tol)
            cfg = ScenarioConfig(
                scenario=args.name,
                params=_parse_kv(args.param),
                grid=args.grid,
                output=args.out,
                seed=args.seed,
                jobs=args.jobs if args.jobs is not None else _default_jobs(),
                fmt=args.format,
            )
            summary = run_scenario(cfg)
            for key in ("csv", "json"):
                if key in summary:
                    print(f"wrote {summary[key]}")
            return 0

        if args.command == "check":
            obj = _load_json(args.config)
            for key in ("channel", "family", "criterion"):
                if key not in obj:
                    raise SystemExit(f"config is missing field {key!r}")
            report = run_custom(
                obj["channel"], obj["family"], obj["criterion"], obj.get("sense", "positive_f")
            )
            json.dump(report.to_json(), sys.stdout, indent=2, sort_keys=True)
            print()
            return 0

        if args.command == "scan":
            cfg = ScenarioConfig.from_json(_load_json(args.config))
            summary = run_scenario(cfg)
            for key in ("csv", "json"):
                if key in summary:
                    print(f"wrote {summary[key]}")
            return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
