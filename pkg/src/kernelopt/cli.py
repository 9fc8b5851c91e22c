"""Command-line entry point.

    kernelopt tails|adversarial|oracle|modus-ponens|cover
        --config <file> [--out <dir>] [--seed <u64>] [--threads <k>]

--threads falls back to the KERNELOPT_THREADS environment variable, then to
the config value. Exit codes: 0 success (including "phenomenon not
observed"), 1 contract violation, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, load_config
from .core import ContractViolation
from .experiments import RUNNERS

_SUBCOMMANDS = {
    "tails": "tails",
    "adversarial": "adversarial",
    "oracle": "oracle",
    "modus-ponens": "modus_ponens",
    "cover": "cover",
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kernelopt",
        description="Config-driven experiments for stochastic global optimizers",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--threads", type=int, default=None, help="worker threads")
        if name == "oracle":
            p.add_argument(
                "--randomized",
                type=int,
                default=None,
                help="number of randomized self-check scenarios",
            )
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    mode = _SUBCOMMANDS[args.command]
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"kernelopt: {exc}", file=sys.stderr)
        return 2
    if cfg.mode != mode:
        print(
            f"kernelopt: config mode '{cfg.mode}' does not match subcommand "
            f"'{args.command}'",
            file=sys.stderr,
        )
        return 2
    if args.seed is not None:
        cfg.master_seed = args.seed
    if getattr(args, "randomized", None) is not None:
        cfg.randomized = args.randomized
    if args.threads is not None:
        cfg.threads = args.threads
    elif os.environ.get("KERNELOPT_THREADS"):
        try:
            cfg.threads = int(os.environ["KERNELOPT_THREADS"])
        except ValueError:
            print("kernelopt: KERNELOPT_THREADS must be an integer", file=sys.stderr)
            return 2
    try:
        return RUNNERS[mode](cfg, args.out)
    except ContractViolation as exc:
        print(f"kernelopt: contract violation: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValueError) as exc:
        print(f"kernelopt: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:  # console_scripts hook
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
