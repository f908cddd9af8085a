"""Command-line entry point: ``wgan-mf <experiment> [--config PATH] ...``.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from ..dynamics import NumericalError
from .config import EXPERIMENTS, ConfigError, parse_config
from .experiments import run

THREADS_ENV = "WGAN_MF_THREADS"

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("wgan_meanfield")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wgan-mf", description="WGAN mean-field experiments")
    sub = p.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="JSON run configuration")
        s.add_argument("--seed", type=int, help="master seed (overrides the config)")
        s.add_argument("--out-dir", type=Path, help="output directory (overrides the config)")
        s.add_argument("--threads", type=int, help=f"worker threads (default ${THREADS_ENV} or 1)")
    return p


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(THREADS_ENV, f"expected an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(THREADS_ENV, "must be >= 1")
    return n


def _load(args):
    data = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"invalid JSON in {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("", "config must be a JSON object")
    kind = data.setdefault("experiment", args.experiment)
    if kind != args.experiment:
        raise ConfigError("experiment", f"config is for {kind!r} but subcommand is {args.experiment!r}")
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2**64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        data["seed"] = args.seed
    return parse_config(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = _load(args)
        threads = args.threads if args.threads is not None else default_threads()
        if threads < 1:
            raise ConfigError("threads", "must be >= 1")
        out = args.out_dir if args.out_dir is not None else Path(cfg.output_dir)
        log.info("running %s (seed %d, %d thread(s)) -> %s", cfg.experiment, cfg.seed, threads, out)
        files = run(cfg, out, threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    log.info("wrote %d files", len(files))
    return EXIT_OK
