"""Command line entry point: ``fracdfrt VERB [--config PATH] [--out DIR] [--no-verify]``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import OUT_ENV, ExperimentConfig, load_config
from .runner import STAGES, StageError, run_experiment, stages_for

VERBS = ("solve-1e", "solve-2e", "theta-scan", "ensemble", "invert", "jump", "figures", "all")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracdfrt", description="Complex-scaled ensemble DFT for a 1D two-electron model.")
    p.add_argument("verb", choices=VERBS)
    p.add_argument("--config", metavar="PATH", help="key=value config file (default: preset paper-A)")
    p.add_argument("--preset", help="shortcut for system.preset when no config file is given")
    p.add_argument("--out", metavar="DIR", help=f"output directory (default: ${OUT_ENV}/<preset> or results/<preset>)")
    p.add_argument("--no-verify", action="store_true", help="exit 0 even if built-in target checks fail")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = ExperimentConfig(preset=args.preset or "paper-A")
    try:
        res = run_experiment(cfg, args.out, stages_for(args.verb))
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    for name, h in res.manifest["headline"].items():
        v, t = h["value"], h["target"]
        flag = "PASS" if h["pass"] else "FAIL"
        print(f"{flag} {name}: {v.real:+.5f}{v.imag:+.5f}i  target {t.real:+.5f}{t.imag:+.5f}i  "
              f"tol ({h['tol_re']:g}, {h['tol_im']:g})")
    print(f"outputs in {res.out_dir}")
    if args.no_verify:
        return 0
    return 0 if res.passed else 1


if __name__ == "__main__":
    sys.exit(main())
