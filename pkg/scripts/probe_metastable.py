"""Scan box size and interaction strength for the paper-B two-electron LER.

Lists the lowest few two-electron eigenvalues, tagging rotated-continuum
points, to show where the metastable state sits for each setting.

    python scripts/probe_metastable.py --half-widths 10 15 25 --lams 1 1.5 2
"""
import argparse

from fracdfrt.eigensolve import build_hamiltonian, continuum_thresholds, is_continuum, solve_ler
from fracdfrt.grid_model import Grid, get_preset


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--half-widths", type=float, nargs="+", default=[15.0, 25.0])
    ap.add_argument("--lams", type=float, nargs="+", default=[1.0])
    ap.add_argument("--h", type=float, default=0.1)
    ap.add_argument("--how-many", type=int, default=8)
    args = ap.parse_args()
    base = get_preset("paper-B").system()
    for L in args.half_widths:
        for lam in args.lams:
            sys = base.with_grid(Grid.symmetric(L, args.h)).with_lambda(lam)
            ler, spectrum = solve_ler(sys, 2, how_many=args.how_many)
            th = continuum_thresholds(build_hamiltonian(sys, 2))
            print(f"L/2={L:5.1f} lambda={lam:4.2f}  LER {ler.energy:.5f}  thresholds "
                  + ", ".join(f"{t.real:.4f}" for t in th))
            for p in sorted(spectrum, key=lambda p: p.value.real):
                tag = "continuum" if is_continuum(p.value, sys.theta, th) else ""
                print(f"    {p.value.real:+.5f} {p.value.imag:+.5f}i  {tag}")


if __name__ == "__main__":
    main()
