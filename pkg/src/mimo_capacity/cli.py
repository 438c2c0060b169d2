"""Command-line front end: ``mimo-capacity table|figure|custom|verify``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .capacity import Scheme
from .reports import (
    FIGURES,
    POWER_CONVENTIONS,
    TABLES,
    ReportRequest,
    Tolerances,
    build_report,
    list_targets,
    run_verify,
)

SEED_ENV = "MIMO_CAPACITY_SEED"


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"error: {SEED_ENV}={raw!r} is not an integer") from None


def _common(p: argparse.ArgumentParser, mc_default: str) -> None:
    p.add_argument("--nr", type=int, help="receive antennas")
    p.add_argument("--nt", type=int, help="transmit antennas")
    p.add_argument("--snr-db", type=float, action="append", dest="snr_db",
                   help="SNR point in dB (repeatable; replaces the default grid)")
    p.add_argument("--samples", type=int, default=1_000_000, help="Monte Carlo draws (default 10^6)")
    p.add_argument("--seed", type=int, default=None, help=f"Monte Carlo seed (default ${SEED_ENV} or 0)")
    p.add_argument("--workers", type=int, default=1, help="threads used for sampling")
    p.add_argument("--method", choices=("both", "numerical", "montecarlo"), default=mc_default)
    p.add_argument("--onoff-power", choices=POWER_CONVENTIONS, default=None,
                   help="power convention of the numerical on-off column "
                        "(tables default to rounded-db, the published convention)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", type=Path, help="write to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mimo-capacity",
        description="Ergodic capacity, on-off rates and outage of IID Rayleigh MIMO channels.",
    )
    parser.add_argument("--list", action="store_true", help="list every table/figure target")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command")

    t = sub.add_parser("table", help="reproduce a published table")
    t.add_argument("ident", metavar="ID", help=f"table number ({ROMAN_HINT})")
    _common(t, "both")

    f = sub.add_parser("figure", help="data series behind a published figure")
    f.add_argument("ident", metavar="N", type=int, help=f"figure number (1..{len(FIGURES)})")
    _common(f, "numerical")

    c = sub.add_parser("custom", help="rates for an arbitrary antenna pair and SNR list")
    c.add_argument("--scheme", action="append", choices=[s.value for s in Scheme],
                   help="rate scheme (repeatable; default csit_waterfill)")
    _common(c, "numerical")

    v = sub.add_parser("verify", help="check all tables against the golden file and run identity checks")
    v.add_argument("--samples", type=int, default=1_000_000)
    v.add_argument("--seed", type=int, default=None)
    v.add_argument("--workers", type=int, default=1)
    v.add_argument("--config", type=Path, help="key=value tolerance overrides "
                                               "(numerical_tol, mc_tol, invariant_tol)")
    v.add_argument("--golden", type=Path, help="golden JSON file (default: bundled published tables)")
    v.add_argument("--out", type=Path, help="directory for the reproduced table CSVs")
    v.add_argument("--table", action="append", dest="tables", metavar="ID",
                   help="restrict to these tables (repeatable)")
    return parser


ROMAN_HINT = f"{next(iter(TABLES))}..{list(TABLES)[-1]}"


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.list:
        for name, desc in list_targets():
            print(f"{name:<12} {desc}")
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else _default_seed()

    if args.command == "verify":
        tol = Tolerances.from_file(args.config) if args.config else Tolerances()
        if args.tables:
            unknown = [t for t in args.tables if t not in TABLES]
            if unknown:
                parser.error(f"unknown table(s): {', '.join(unknown)}")
        result = run_verify(samples=args.samples, seed=seed, workers=args.workers, tolerances=tol,
                            golden_path=args.golden, out_dir=args.out, tables=args.tables)
        for line in result.lines:
            print(line)
        for failure in result.failures:
            print(f"  {failure}", file=sys.stderr)
        print("verify: PASS" if result.passed else f"verify: FAIL ({len(result.failures)} problems)")
        return 0 if result.passed else 1

    if args.command == "table":
        target = f"table:{args.ident.upper()}"
        schemes = ("csit_waterfill",)
    elif args.command == "figure":
        target = f"figure:{args.ident}"
        schemes = ("csit_waterfill",)
    else:
        target = "custom"
        schemes = tuple(args.scheme or ("csit_waterfill",))
    try:
        req = ReportRequest(target, n_r=args.nr, n_t=args.nt,
                            snr_db=tuple(args.snr_db) if args.snr_db else None,
                            samples=args.samples, seed=seed, workers=args.workers,
                            method=args.method, schemes=schemes,
                            onoff_power=args.onoff_power, format=args.format)
        report = build_report(req)
    except ValueError as exc:
        parser.error(str(exc))
    _emit(report.serialize(args.format), args.out)
    if report.errors:
        for err in report.errors:
            print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
