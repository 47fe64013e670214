"""Full pipeline for both presets; prints the headline table.

    FRACDFRT_OUT=results python scripts/run_presets.py
"""
import sys

from fracdfrt.config import ExperimentConfig
from fracdfrt.runner import run_experiment


def main(names=("paper-A", "paper-B")):
    ok = True
    for name in names:
        res = run_experiment(ExperimentConfig(preset=name))
        print(f"{name}: outputs in {res.out_dir}")
        for key, h in res.manifest["headline"].items():
            v, t = h["value"], h["target"]
            print(f"  {'PASS' if h['pass'] else 'FAIL'} {key:11s} {v.real:+.5f}{v.imag:+.5f}i   "
                  f"target {t.real:+.3f}{t.imag:+.3f}i")
        ok &= res.passed
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main(tuple(sys.argv[1:]) or ("paper-A", "paper-B")))
