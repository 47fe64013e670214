"""Follow the preset LERs across scaling angles and report stationarity.

    python scripts/theta_scan.py paper-B --particles 2 --thetas 0.2 0.5 13
"""
import argparse

import numpy as np

from fracdfrt.eigensolve import solve_ler, theta_trajectory
from fracdfrt.grid_model import get_preset


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("preset")
    ap.add_argument("--particles", type=int, default=1)
    ap.add_argument("--thetas", type=float, nargs=3, default=[0.3, 0.45, 7], metavar=("START", "STOP", "NUM"))
    args = ap.parse_args()
    sys = get_preset(args.preset).system()
    E0 = solve_ler(sys, args.particles)[0].energy
    thetas = np.linspace(args.thetas[0], args.thetas[1], int(args.thetas[2]))
    traj = theta_trajectory(sys, thetas, E0, args.particles)
    dE = np.abs(traj.derivative)
    for th, E, d in zip(traj.thetas, traj.energies, dE):
        print(f"{th:.4f}  {E.real:+.8f} {E.imag:+.3e}i   |dE/dtheta| {d:.2e}")
    spread = np.max(np.abs(traj.energies[:, None] - traj.energies[None, :]))
    print(f"optimal theta {traj.optimal_theta:.4f}, max spread {spread:.2e}")


if __name__ == "__main__":
    main()
