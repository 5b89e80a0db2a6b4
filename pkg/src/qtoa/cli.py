"""Command line entry point: ``qtoa <command> --config run.json --out dir``."""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from .config import load_config
from .errors import ConfigError, QTOAError
from .pipeline import COMMANDS, run_pipeline, write_json

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

_HELP = {
    "kernel": "dump the kernel factor T(q, q') on a square grid",
    "spectrum": "coarse-grain the operator and write its eigenvalues and eigenfunctions",
    "evolve": "evolve the selected eigenfunctions and record observables",
    "arrival": "full pipeline: spectrum, evolution and arrival analysis",
    "conjugacy": "time kernel equation residual of the kernel factor",
    "parity": "parity residual of the kernel and reflected-potential check",
    "sweep": "arrival analysis across deformations 1 + alpha x^2",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qtoa", description="Quantized time-of-arrival operators: spectra and arrival dynamics.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=_HELP[name])
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output directory (default: config 'output' or ./qtoa-out)")
        p.add_argument("--quiet", action="store_true", help="suppress the summary on stdout")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = args.out
    try:
        config = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        if out:
            Path(out).mkdir(parents=True, exist_ok=True)
            write_json(Path(out) / "manifest.json", {
                "command": args.command, "status": "config_error", "error": str(exc), "config": None,
            })
        return EXIT_CONFIG
    with warnings.catch_warnings():
        if args.quiet:
            warnings.simplefilter("ignore")
        try:
            manifest = run_pipeline(config, args.command, out)
        except ConfigError as exc:
            print(f"configuration error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except QTOAError as exc:
            print(f"numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
    if not args.quiet:
        failed = [k for k, v in manifest["checks"].items() if not v["pass"]]
        print(f"{args.command}: wrote {len(manifest['files'])} file(s) to {out or config.output or 'qtoa-out'}")
        for note in manifest["notes"]:
            print(f"  note: {note}")
        if failed:
            print(f"  invariant checks outside tolerance: {', '.join(failed)}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
