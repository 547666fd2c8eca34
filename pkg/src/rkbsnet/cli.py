"""Command-line entry point: ``rkbsnet <command> --config run.json``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .formats import ConfigError, load_config
from .pipeline import COMMANDS, run_verify
from .regularized import ConvergenceError
from .trainer import TrainingError

EXIT_OK, EXIT_VERIFY, EXIT_USAGE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rkbsnet",
        description="Sparse kernel expansions over neural-network parameters.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "sample": "draw the candidate parameter set",
        "mni": "minimum norm interpolation with refinement rounds",
        "reg": "regularized fit at a single lambda",
        "path": "regularized fits along a decreasing lambda sequence",
        "train": "direct gradient training of a network expansion",
        "verify": "reload model.json and check it against report.json",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, type=Path, help="JSON run configuration")
        p.add_argument("--out", type=Path, help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="candidate / initialization seed override")
        if name == "verify":
            p.add_argument("--model", type=Path, help="model file (default OUT/model.json)")
            p.add_argument("--report", type=Path, help="report file (default OUT/report.json)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg.output = args.out
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg.candidates = replace(cfg.candidates, seed=args.seed)
        if args.command == "verify":
            result = run_verify(cfg, args.model, args.report)
        else:
            result = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"rkbsnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"rkbsnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, TrainingError) as exc:
        print(f"rkbsnet: verification failed: convergence ({exc})", file=sys.stderr)
        return EXIT_VERIFY
    if result.status != EXIT_OK:
        print(f"rkbsnet: verification failed: {', '.join(result.failures)}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
