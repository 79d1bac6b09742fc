"""Batch experiment runner.

Subcommands:
  run               execute a config, writing artifacts plus manifest.json
  validate          schema-check a config without side effects
  list-experiments  show the available experiment names

Exit codes: 0 success, 2 config/schema problem, 3 numerical abort,
4 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import os
import sys

from .artifacts import ArtifactWriter, sha256_file
from .config import ConfigError, load_config
from .errors import NumericalError, ResourceError, ValidationError
from .experiments import DESCRIPTIONS, RUNNERS

THREADS_ENV = "BOSELAB_THREADS"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_RESOURCE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boselab",
        description="bosonic-chain and kicked-condensate experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute an experiment config")
    run_p.add_argument("--config", required=True, help="path to the JSON config")
    run_p.add_argument("--out", default=None,
                       help="output directory (overrides output.directory)")
    run_p.add_argument("--threads", type=int, default=None,
                       help=f"worker threads for scans (or ${THREADS_ENV})")
    run_p.add_argument("--resume", action="store_true",
                       help="continue from the newest checkpoint in the "
                            "output directory")

    val_p = sub.add_parser("validate", help="schema-check a config (dry run)")
    val_p.add_argument("--config", required=True)

    sub.add_parser("list-experiments", help="list known experiment names")
    return parser


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            print(f"warning: ignoring non-integer {THREADS_ENV}={env!r}",
                  file=sys.stderr)
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-experiments":
        for name in sorted(RUNNERS):
            print(f"{name:22s} {DESCRIPTIONS[name]}")
        return EXIT_OK

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error at {exc.field}: "
              f"{str(exc).split(': ', 1)[-1]}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(f"ok: {cfg['experiment']}")
        return EXIT_OK

    outdir = args.out or cfg["output"]["directory"]
    writer = ArtifactWriter(outdir)
    runner = RUNNERS[cfg["experiment"]]
    try:
        summary = runner(cfg, writer, outdir, resume=args.resume,
                         threads=_threads(args))
    except ConfigError as exc:
        print(f"config error at {exc.field}: "
              f"{str(exc).split(': ', 1)[-1]}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceError as exc:
        print(f"resource budget exceeded: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except NumericalError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    writer.write_manifest(sha256_file(args.config))
    for key in ("energy_norm_estimate_ER", "eee_log_negativity",
                "max_relative_energy_deviation", "min_collection"):
        if summary.get(key) is not None:
            print(f"{key} = {summary[key]}")
    print(f"artifacts written to {outdir}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
