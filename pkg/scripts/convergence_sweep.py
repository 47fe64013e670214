"""Grid-spacing and box-size sweep of the preset LER energies.

    python scripts/convergence_sweep.py paper-A --particles 1 2
"""
import argparse
import time

from fracdfrt.eigensolve import solve_ler
from fracdfrt.grid_model import Grid, get_preset


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("preset")
    ap.add_argument("--particles", type=int, nargs="+", default=[1])
    ap.add_argument("--spacings", type=float, nargs="+", default=[0.2, 0.1, 0.05])
    ap.add_argument("--half-widths", type=float, nargs="+", default=None)
    args = ap.parse_args()
    p = get_preset(args.preset)
    widths = args.half_widths or [p.grid.half_width]
    print("particles  L/2     h       Re E              Im E           seconds")
    for k in args.particles:
        for L in widths:
            for h in args.spacings:
                sys = p.system().with_grid(Grid.symmetric(L, h))
                t = time.time()
                try:
                    E = solve_ler(sys, k)[0].energy
                except MemoryError as e:
                    print(f"{k:9d}  {L:5.1f}  {h:6.3f}  skipped: {e}")
                    continue
                print(f"{k:9d}  {L:5.1f}  {h:6.3f}  {E.real:+.10f}  {E.imag:+.3e}  {time.time() - t:8.1f}", flush=True)


if __name__ == "__main__":
    main()
