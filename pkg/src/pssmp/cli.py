"""Command line front end.

Subcommands group the experiment operations; each takes a config file
plus global overrides:

    pssmp simulate      --config cfg.ini [--seed N] [--out DIR] [--format csv|json]
    pssmp passage       --config cfg.ini ...
    pssmp integral-test --config cfg.ini ...
    pssmp lil           --config cfg.ini ...
    pssmp duality-check --config cfg.ini ...
    pssmp bessel        --config cfg.ini ...

The seed resolution order is --seed, then the PSSMP_SEED environment
variable, then the config file.  Invalid input exits with status 2 and a
machine-readable error JSON on stdout.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import load_config
from .errors import PssmpError
from .io import dumps_stable
from .runner import RunError, known_ops, run_experiment

_FAMILIES = {
    "simulate": "simulate.",
    "passage": "passage.",
    "integral-test": "integral_test.",
    "lil": "lil.",
    "duality-check": "duality.",
    "bessel": "bessel.",
}


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pssmp", description=__doc__.strip().splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for cmd in _FAMILIES:
        p = sub.add_parser(cmd, help=f"run a {cmd} experiment from a config file")
        p.add_argument("--config", required=True, help="INI config with [model]/[experiment]/[output]")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="preferred artifact format")
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        spec = load_config(args.config)
        prefix = _FAMILIES[args.command]
        if not spec.op.startswith(prefix):
            raise RunError(
                "unknown_op",
                f"operation {spec.op!r} does not belong to '{args.command}' "
                f"(known: {', '.join(o for o in known_ops() if o.startswith(prefix))})",
            )
        if args.seed is not None:
            spec.seed = args.seed
        elif "PSSMP_SEED" in os.environ:
            spec.seed = int(os.environ["PSSMP_SEED"])
        if args.out is not None:
            spec.out_dir = args.out
        if args.format is not None:
            spec.fmt = args.format
        manifest = run_experiment(spec)
    except RunError as exc:
        print(dumps_stable({"code": exc.code, "message": str(exc)}))
        return 2
    except PssmpError as exc:
        print(dumps_stable({"code": "bad_params", "message": str(exc)}))
        return 2
    print(dumps_stable({"ok": True, "manifest": manifest}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
