"""Command-line front end: ``fronthaul <subcommand> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import dimred
from .config import default_dict, load_config, merge
from .errors import ConfigError
from .harness import execute
from .selftest import run_selftest

log = logging.getLogger("fronthaul")

EXPERIMENTS = ("sweep", "converge", "compare-dr", "imperfect-csi", "snr-scaling")

# per-subcommand defaults layered under the config file
SUBCOMMAND_DEFAULTS = {
    "sweep": {"methods": [dimred.TCKLT, dimred.NONE]},
    "converge": {"methods": [dimred.TCKLT], "trials": 1000},
    "compare-dr": {
        "methods": [dimred.TCKLT, dimred.TKLT, dimred.ANTENNA_SELECT, dimred.ANTENNA_REDUCE, dimred.NONE],
    },
    "imperfect-csi": {"methods": [dimred.TCKLT, dimred.NONE], "rho_pl_db": [0.0, 10.0, 20.0]},
    "snr-scaling": {"methods": [dimred.TCKLT, dimred.ANTENNA_REDUCE, dimred.NONE]},
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fronthaul",
        description="Dimension-reduction fronthaul compression experiments.",
    )
    p.add_argument("subcommand", choices=EXPERIMENTS + ("selftest",))
    p.add_argument("--config", type=Path, help="YAML experiment config")
    p.add_argument(
        "--overrides", action="extend", nargs="+", default=[], metavar="KEY=VALUE",
        help="dotted-path overrides, e.g. scenario.rho_db=25",
    )
    p.add_argument("--output-dir", type=Path, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--quiet", action="store_true")
    g.add_argument("--verbose", action="store_true")
    return p


def parse_and_dispatch(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.quiet else logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    if args.subcommand == "selftest":
        results = run_selftest(seed=args.seed if args.seed is not None else 12345)
        for name, ok in results:
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
        passed = sum(ok for _, ok in results)
        print(f"{passed} passed, {len(results) - passed} failed")
        return 0 if passed == len(results) else 1

    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"scenario.seed={args.seed}")
    if args.trials is not None:
        overrides.append(f"trials={args.trials}")
    try:
        base = merge(default_dict(), SUBCOMMAND_DEFAULTS[args.subcommand])
        cfg = load_config(args.config, overrides, base=base)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_dir = args.output_dir or Path(cfg.output_path)
    try:
        summary = execute(args.subcommand, cfg, out_dir, workers=args.workers)
    except Exception as exc:
        log.error("%s failed: %s", args.subcommand, exc, exc_info=args.verbose)
        return 1
    if summary.get("failures"):
        log.warning("%d trials failed and were excluded", summary["failures"])
    if summary.get("bound_violations"):
        log.error("%d bound violations detected", summary["bound_violations"])
        return 1
    log.info("wrote results to %s", out_dir)
    return 0


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
