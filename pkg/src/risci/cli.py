"""Command-line entry point: ``risci <subcommand> [--config F] [--seed N] [--out DIR] [--threads N]``.

Exit codes: 0 success, 2 configuration or usage error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from threadpoolctl import threadpool_limits

from .config import ConfigError, experiment_config, load_config
from .experiments import RUNNERS, ExperimentError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

SUBCOMMANDS = {
    "masks": ("masks", "generate and export masks (npz + per-panel CSV)"),
    "fields": ("fields", "render per-panel and aggregate speckle patterns"),
    "svd": ("svd", "singular-value study of mask variants"),
    "image": ("image", "single-method reconstruction with matrix/measurement export"),
    "compare": ("compare", "proposed vs. raster scan vs. random patterns"),
    "clutter": ("clutter", "clutter robustness of proposed vs. random patterns"),
    "roi-sweep": ("roi_sweep", "mask regeneration and confinement across several ROIs"),
}

log = logging.getLogger("risci")


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="YAML config (default: built-in values)")
    parser.add_argument("--seed", type=int, default=default, help="root RNG seed (overrides config)")
    parser.add_argument("--out", default=default, help="output directory (overrides config)")
    parser.add_argument("--threads", type=int, default=default, help="BLAS thread limit")
    parser.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="risci", description=__doc__.splitlines()[0])
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, (_, text) in SUBCOMMANDS.items():
        p = sub.add_parser(cmd, help=text, description=text)
        # accept global flags after the subcommand as well
        _global_flags(p, suppress=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    name = SUBCOMMANDS[args.command][0]
    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = experiment_config(load_config(args.config), name, args.seed, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with threadpool_limits(limits=args.threads):
            RUNNERS[name](cfg)
    except ExperimentError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, MemoryError) as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    log.info("%s finished; outputs in %s/%s", args.command, cfg.output_dir, name)
    print(f"{args.command}: wrote {cfg.output_dir}/{name}/ledger.jsonl")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
