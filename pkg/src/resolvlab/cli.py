"""Command-line front end: ``resolvlab {bounds,simulate,exact,hamming,optimize}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Optional, Sequence

from . import commands
from .config import MAX_SEED, load
from .errors import CapExceededError, ConfigError, InfeasibleTargetError, ResolvabilityError

SEED_ENV = "RESOLVLAB_SEED"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAP = 3
EXIT_INFEASIBLE = 4

log = logging.getLogger("resolvlab")


def _seed(value: str) -> int:
    s = int(value, 0)
    if not 0 <= s <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return s


def _positive(value: str) -> int:
    v = int(value)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resolvlab",
        description="Random-coding resolvability experiments and bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, metavar="PATH", help="JSON experiment config")
        p.add_argument("--seed", type=_seed, metavar="U64",
                       help=f"master seed (default: config, then ${SEED_ENV}, then 0)")
        p.add_argument("--out", metavar="PATH", help="write output here instead of stdout")
        p.add_argument("--trials", type=_positive, metavar="N", help="override config trials")
        p.add_argument("-v", "--verbose", action="store_true")

    common(sub.add_parser("bounds", help="closed-form bounds and thresholds per sweep point"))
    p = sub.add_parser("simulate", help="Monte Carlo E[D] per sweep point")
    common(p)
    p.add_argument("--workers", type=_positive, default=1, help="threads for per-trial work")
    p = sub.add_parser("exact", help="exact E[D], I(C;V^n) and E0n by enumeration")
    common(p)
    p.add_argument("--curve", metavar="PATH",
                   help="also write the rho-curve CSV (first sweep point)")
    common(sub.add_parser("hamming", help="(7,4) Hamming code through the ball channel"),
           needs_config=False)
    common(sub.add_parser("optimize", help="minimal rate certificate and verdicts"))
    return parser


def resolve_seed(cli_seed: Optional[int], config_seed: Optional[int]) -> int:
    if cli_seed is not None:
        return cli_seed
    if config_seed is not None:
        return config_seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return _seed(env)
        except (ValueError, argparse.ArgumentTypeError):
            raise ConfigError(f"${SEED_ENV}={env!r} is not an unsigned 64-bit integer") from None
    return 0


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(args: argparse.Namespace) -> int:
    if args.command == "hamming":
        _emit(json.dumps(commands.cmd_hamming(), indent=2) + "\n", args.out)
        return EXIT_OK

    cfg = load(args.config)
    if args.command == "bounds":
        _emit(commands.cmd_bounds(cfg), args.out)
    elif args.command == "simulate":
        seed = resolve_seed(args.seed, cfg.seed)
        log.info("simulate: seed=%d trials=%d", seed, args.trials or cfg.trials)
        _emit(commands.cmd_simulate(cfg, seed, args.trials, args.workers), args.out)
    elif args.command == "exact":
        _emit(commands.cmd_exact(cfg), args.out)
        if args.curve:
            pt = cfg.points[0]
            _emit(commands.cmd_curve(cfg, pt.n, pt.M), args.curve)
    elif args.command == "optimize":
        _emit(json.dumps(commands.cmd_optimize(cfg), indent=2) + "\n", args.out)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return run(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except CapExceededError as e:
        print(f"refused: {e}", file=sys.stderr)
        return EXIT_CAP
    except InfeasibleTargetError as e:
        print(json.dumps({
            "feasible": False,
            "residual": e.residual,
            "violated_output": e.worst_output,
            "message": str(e),
        }), file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ResolvabilityError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
