"""Command-line entry point: ``ssiss <scenario> --config <file> ...``."""

from __future__ import annotations

import argparse
import logging
import sys

from .experiments import (SCENARIOS, ExperimentConfig, emit_report, parse_value,
                          run_experiment)

log = logging.getLogger("ssiss")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ssiss", description="Run a wave-packet experiment "
                                "scenario and report bound-versus-oracle verdicts.")
    p.add_argument("scenario", choices=SCENARIOS)
    p.add_argument("--config", help="JSON config file (defaults used when omitted)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a dotted config key, value parsed as JSON")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--formats", default="json,csv",
                   help="comma-separated subset of json,csv,svg")
    p.add_argument("--seed", type=int, help="seed for randomized checks")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.config:
            cfg = ExperimentConfig.from_file(args.config, args.scenario)
        else:
            cfg = ExperimentConfig(args.scenario)
        for item in args.set:
            key, sep, val = item.partition("=")
            if not sep:
                raise ValueError(f"--set expects KEY=VALUE, got {item!r}")
            cfg = cfg.with_override(key.strip(), parse_value(val))
        if args.seed is not None:
            cfg = cfg.with_override("seed", args.seed)
        if args.out:
            cfg = cfg.with_override("output_dir", args.out)
        formats = [f.strip() for f in args.formats.split(",") if f.strip()]
        report = run_experiment(cfg)
        paths = emit_report(report, cfg.output_dir, formats)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for name, verdict in report.verdicts.items():
        print(f"{verdict}  {name}")
    for p in paths:
        log.info("wrote %s", p)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
