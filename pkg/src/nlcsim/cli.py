"""Command-line interface.

Subcommands: run, audit, resume, inspect-checkpoint.
Exit statuses: 0 completed, 1 usage/config error, 2 blow-up detected,
3 I/O failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .checkpoint import CheckpointError
from .config import ConfigError, parse_audit_config, parse_config
from .runner import describe_checkpoint, execute_audit, execute_run
from .solver import UnstableTimestepError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BLOWUP = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="nlcsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="path to the config file")
        p.add_argument("--output-dir", default=None, help="override output directory")
        p.add_argument("--seed", type=int, default=None, help="override configured seeds")
        p.add_argument("--quiet", action="store_true", help="suppress summary output")

    p_run = sub.add_parser("run", help="run a monitored simulation")
    common(p_run)

    p_audit = sub.add_parser("audit", help="run the inequality audits")
    common(p_audit)

    p_resume = sub.add_parser("resume", help="continue a run from a checkpoint")
    p_resume.add_argument("checkpoint", help="checkpoint file to resume from")
    common(p_resume)

    p_inspect = sub.add_parser("inspect-checkpoint", help="print checkpoint header")
    p_inspect.add_argument("checkpoint", help="checkpoint file to inspect")
    return parser


def _load_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "inspect-checkpoint":
            print(describe_checkpoint(args.checkpoint))
            return EXIT_OK

        if args.command == "audit":
            acfg = parse_audit_config(_load_text(args.config))
            if args.seed is not None:
                acfg = replace(acfg, audit=replace(acfg.audit, seed=args.seed))
            execute_audit(acfg, output_dir=args.output_dir, quiet=args.quiet)
            return EXIT_OK

        cfg = parse_config(_load_text(args.config))
        if args.seed is not None:
            cfg = replace(
                cfg, init=replace(cfg.init, u_seed=args.seed, d_seed=args.seed + 1)
            )
        resume_from = args.checkpoint if args.command == "resume" else None
        result = execute_run(
            cfg, output_dir=args.output_dir, quiet=args.quiet, resume_from=resume_from
        )
        return EXIT_BLOWUP if result.blown_up else EXIT_OK
    except (ConfigError, UnstableTimestepError, CheckpointError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
