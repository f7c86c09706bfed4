"""Command-line entry point.

Exit codes: 0 on success, 2 on a bound violation or invalid input,
3 when an iterative routine fails to converge.
"""

from __future__ import annotations

import argparse
import sys

from .. import __version__
from ..errors import ConvergenceError, ValidationError
from .config import EXPERIMENTS, config_hash, load_config
from .emit import emit_results
from .sweeps import run_sweep

EXIT_OK = 0
EXIT_BOUND_OR_INVALID = 2
EXIT_NO_CONVERGENCE = 3

_HELP = {
    "interferometric": "two-lens eps sweep: closed-form and random Gaussian read-outs",
    "single-lens": "moment-chart information of Gaussian read-outs on one aperture",
    "superres": "two-point separation sweep: Gaussian read-outs vs mode sorting",
    "bayes": "worst-case Bayesian error floors and optimal priors",
    "mc": "Monte Carlo maximum-likelihood check of a Cramer-Rao bound",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gmlab",
        description="Numerical laboratory for Gaussian-measurement limits",
    )
    parser.add_argument("--version", action="version", version=f"gmlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument(
            "--seed",
            type=int,
            default=None,
            help="RNG seed (overrides the config's seed; default 0)",
        )
        p.add_argument(
            "--format", choices=("csv", "json"), default="csv", help="output format"
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw, cfg = load_config(args.config, expect=args.command)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_BOUND_OR_INVALID
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BOUND_OR_INVALID

    seed = args.seed if args.seed is not None else int(raw.get("seed", 0))
    try:
        result = run_sweep(args.command, cfg, seed)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BOUND_OR_INVALID

    provenance = {
        "config_sha256": config_hash(raw),
        "experiment": args.command,
        "format": args.format,
        "package": "gmlab",
        "seed": seed,
        "version": __version__,
    }
    paths = emit_results(result.tables, args.out, args.format, provenance)
    for path in paths:
        print(f"wrote {path}")
    for note in result.notes:
        print(f"note: {note}")
    if not result.bounds_ok:
        print("error: at least one bound row failed", file=sys.stderr)
        return EXIT_BOUND_OR_INVALID
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
