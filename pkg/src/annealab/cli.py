"""Command-line front end.

    annealab <experiment-kind> --config path [--out dir] [--threads k] [--seed n]

Exit codes: 0 success, 1 verification failure or unexpected error,
2 config/parse error, 3 numeric instability, 4 degeneracy abort.
"""

from __future__ import annotations

import argparse
import sys

from .config import KINDS, load_config
from .errors import ConfigError, DegeneracyError, MappingError, StabilityError
from .experiments import run

EXIT_PARSE = 2
EXIT_UNSTABLE = 3
EXIT_DEGENERATE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="annealab",
        description="Annealing-dynamics experiments on small Ising systems.")
    sub = parser.add_subparsers(dest="kind", required=True, metavar="experiment-kind")
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--threads", type=int, default=None, help="worker pool size for sweeps")
        p.add_argument("--seed", type=int, default=None, help="random seed (overrides config)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.kind, out=args.out,
                          threads=args.threads, seed=args.seed)
        summary = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (StabilityError, MappingError) as exc:
        print(f"numeric instability: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except DegeneracyError as exc:
        print(f"degeneracy abort: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE

    if summary.get("passed") is False:
        print("verification FAILED; see report.json", file=sys.stderr)
        return 1
    print(f"{args.kind}: wrote artifacts to {cfg.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
