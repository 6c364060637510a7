"""Command-line entry point: ``qreservoir run | dump-circuit | version``."""
from __future__ import annotations

import argparse
import sys
import warnings

from . import __version__
from .config import load_config
from .errors import QRCError
from .experiment import dump_circuit, run_experiment


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qreservoir", description="Quantum reservoir computing experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write its artifacts")
    run.add_argument("config")
    run.add_argument("--out", default="out", help="output directory (default: ./out)")
    run.add_argument("--workers", type=int, default=1, help="threads for shot execution; outputs do not depend on it")
    run.add_argument("--raw-shots", action="store_true", help="also write every shot's clbits (static scheme)")

    dump = sub.add_parser("dump-circuit", help="print the circuit for a series prefix")
    dump.add_argument("config")
    dump.add_argument("--steps", type=int, default=3, help="series prefix length (default: 3)")

    sub.add_parser("version", help="print the package version")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "version":
        print(__version__)
        return 0
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return 2
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        warnings.showwarning = lambda msg, *a, **k: print(f"warning: {msg}", file=sys.stderr)
        try:
            cfg = load_config(args.config)
            if args.command == "dump-circuit":
                sys.stdout.write(dump_circuit(cfg, args.steps))
                return 0
            result = run_experiment(cfg, args.out, workers=args.workers, raw_shots=args.raw_shots)
        except (QRCError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    for key, value in result.metrics.items():
        print(f"{key}: {value}")
    print(f"artifacts written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
