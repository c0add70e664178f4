"""Command-line entry point: ``scoreprior <experiment> [--config PATH] ...``.

On success a JSON object with ``"status": "ok"`` is printed to stdout and
the exit code is 0.  On failure one JSON line with ``"status": "error"`` is
printed to stderr and the exit code is 2 for configuration problems, 1 for
anything else.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .exceptions import ConfigError, ScorePriorError
from .experiments import EXPERIMENTS, build_config, load_config, run


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Raises instead of printing usage and exiting, so errors stay JSON."""

    def error(self, message):
        raise _ArgError(message)


def _parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="scoreprior", description="Scoring-rule prior experiments")
    sub = ap.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--reps", type=int, help="replications per cell")
        sp.add_argument("--desk-scale", action="store_true",
                        help="reduced replication/iteration preset")
    return ap


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _fail(kind: str, message: str, code: int) -> int:
    print(json.dumps({"status": "error", "error": kind, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except _ArgError as exc:
        return _fail("UsageError", str(exc), 2)
    overrides = dict(seed=args.seed, out=args.out, reps=args.reps, desk_scale=args.desk_scale)
    t0 = time.perf_counter()
    try:
        if args.config:
            cfg = load_config(args.config, args.experiment, **overrides)
        else:
            cfg = build_config(args.experiment, {}, **overrides)
        result = run(cfg)
    except ConfigError as exc:
        return _fail("ConfigError", str(exc), 2)
    except ScorePriorError as exc:
        return _fail(type(exc).__name__, str(exc), 1)
    except (OSError, ValueError) as exc:
        return _fail(type(exc).__name__, str(exc), 1)
    payload = {"status": "ok", "experiment": cfg.experiment, "seed": cfg.seed,
               "out": str(cfg.out), "seconds": round(time.perf_counter() - t0, 3)}
    payload.update(result)
    print(json.dumps(payload, default=_default))
    return 0


if __name__ == "__main__":
    sys.exit(main())
