"""Command line front end.

    fns-lab run <config> [--output DIR] [--seed N] [--threads N]
    fns-lab validate <config>
    fns-lab list-experiments

Exit codes: 0 success, 1 a check reported FAIL, 2 usage or config
problem, 3 numerical abort (captured in the manifest).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import KIND_SUMMARIES, KINDS, ConfigError, parse_config_file
from .runner import run


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="fns-lab",
        description="Experiment runner for the fractional-dissipation "
                    "flow laboratory.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment config")
    p_run.add_argument("config", help="path to an INI experiment config")
    p_run.add_argument("--output", default=None,
                       help="output directory (overrides the config; "
                            "must be new or empty)")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    p_run.add_argument("--threads", type=int, default=None,
                       help="recorded in the manifest and exported as the "
                            "BLAS thread-count environment hints")

    p_val = sub.add_parser("validate", help="check a config and report "
                                            "every problem")
    p_val.add_argument("config", help="path to an INI experiment config")

    sub.add_parser("list-experiments", help="list the experiment kinds")
    return ap


def _load(path):
    try:
        return parse_config_file(path)
    except ConfigError as e:
        for line in e.errors:
            print(f"config error: {line}", file=sys.stderr)
        return None
    except OSError as e:
        print(f"cannot read config: {e}", file=sys.stderr)
        return None


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "list-experiments":
        width = max(len(k) for k in KINDS)
        for kind in KINDS:
            print(f"{kind:<{width}}  {KIND_SUMMARIES[kind]}")
        return 0

    cfg = _load(args.config)
    if cfg is None:
        return 2

    if args.command == "validate":
        print(f"config OK: kind = {cfg.kind}, alpha = {cfg.params.alpha:g}, "
              f"n = {cfg.params.n}, M = {cfg.params.M}, seed = {cfg.seed}")
        return 0

    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    try:
        manifest = run(cfg, output=args.output, threads=args.threads)
    except ConfigError as e:
        for line in e.errors:
            print(f"config error: {line}", file=sys.stderr)
        return 2
    for line in manifest.summary_lines():
        print(line)
    return manifest.exit_code


if __name__ == "__main__":
    sys.exit(main())
