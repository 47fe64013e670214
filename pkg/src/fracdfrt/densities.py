"""Complex one-body densities, fractional-N ensembles and E(N) curves."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .eigensolve import ResonanceState
from .grid_model import Grid

NORM_TOL = 1e-8


@dataclass
class ComplexDensity:
    grid: Grid
    values: np.ndarray
    particle_number: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != (self.grid.n_points,):
            raise ValueError("density values do not match the grid")
        if self.particle_number < 0:
            raise ValueError("particle number must be >= 0")
        err = abs(self.integral() - self.particle_number)
        if err > NORM_TOL * max(1.0, self.particle_number):
            raise ValueError(f"density integrates to {self.integral()}, expected {self.particle_number}")

    def integral(self) -> complex:
        return complex(np.sum(self.values) * self.grid.h)


def density_1e(state: ResonanceState) -> ComplexDensity:
    """phi(x)^2, the bilinear (left = transpose of right) one-body density."""
    if state.particle_count != 1:
        raise ValueError("density_1e needs a one-particle state")
    return ComplexDensity(state.grid, state.vector**2, 1.0)


def density_2e(state: ResonanceState) -> ComplexDensity:
    """n(x) = 2 * sum_x' Psi(x, x')^2 h for a symmetric pair amplitude."""
    if state.particle_count != 2:
        raise ValueError("density_2e needs a two-particle state")
    psi = state.vector
    return ComplexDensity(state.grid, 2.0 * np.sum(psi**2, axis=1) * state.grid.h, 2.0)


def density_of(state: ResonanceState | None, grid: Grid | None = None) -> ComplexDensity:
    """Density of a state; ``None`` stands for the zero-electron vacuum."""
    if state is None:
        if grid is None:
            raise ValueError("vacuum density needs a grid")
        return ComplexDensity(grid, np.zeros(grid.n_points, dtype=complex), 0.0)
    if state.particle_count == 1:
        return density_1e(state)
    return density_2e(state)


def energy_of(state: ResonanceState | None) -> complex:
    return 0j if state is None else complex(state.energy)


@dataclass
class EnsembleSpec:
    """Mixture of the J- and (J+1)-electron states at particle number N.

    ``state_J=None`` with ``J=0`` means the vacuum (E=0, n=0).
    """

    N: float
    J: int
    state_J: ResonanceState | None
    state_J1: ResonanceState

    def __post_init__(self):
        if self.J < 0 or not (self.J <= self.N <= self.J + 1):
            raise ValueError(f"need J <= N <= J+1 with J >= 0, got N={self.N}, J={self.J}")
        if self.state_J is None and self.J != 0:
            raise ValueError("only the J=0 end may be the vacuum")

    @property
    def weights(self) -> tuple[float, float]:
        w1 = self.N - self.J
        return 1.0 - w1, w1

    @property
    def grid(self) -> Grid:
        return self.state_J1.grid


def ensemble_density(spec: EnsembleSpec) -> ComplexDensity:
    nJ = density_of(spec.state_J, spec.grid)
    nJ1 = density_of(spec.state_J1)
    if nJ.grid != nJ1.grid:
        raise ValueError("J and J+1 densities live on different grids")
    wJ, wJ1 = spec.weights
    return ComplexDensity(spec.grid, wJ * nJ.values + wJ1 * nJ1.values, spec.N)


def ensemble_energy(spec: EnsembleSpec) -> complex:
    wJ, wJ1 = spec.weights
    return wJ * energy_of(spec.state_J) + wJ1 * energy_of(spec.state_J1)


def mix_densities(N: float, densities: dict[int, ComplexDensity]) -> ComplexDensity:
    """Ensemble density at N from a map of integer densities (0 may be omitted)."""
    J = min(int(np.floor(N)), max(densities))
    if J == N and J > 0:
        J -= 1  # integer N is the upper end of (J-1, J]
    lo = densities.get(J)
    hi = densities[J + 1]
    w = N - J
    lo_vals = 0.0 if lo is None else lo.values
    return ComplexDensity(hi.grid, (1 - w) * lo_vals + w * hi.values, N)


@dataclass
class ENCurve:
    N_samples: np.ndarray
    energies: np.ndarray
    breakpoints: list[int]

    def slopes(self) -> dict[tuple[int, int], complex]:
        """dE/dN on each integer interval."""
        out = {}
        for a, b in zip(self.breakpoints[:-1], self.breakpoints[1:]):
            ea = np.interp(a, self.N_samples, self.energies.real) + 1j * np.interp(a, self.N_samples, self.energies.imag)
            eb = np.interp(b, self.N_samples, self.energies.real) + 1j * np.interp(b, self.N_samples, self.energies.imag)
            out[(a, b)] = complex((eb - ea) / (b - a))
        return out


def _integer_energies(states) -> dict[int, complex]:
    out = {0: 0j}
    for k, s in states.items():
        out[int(k)] = complex(s.energy) if isinstance(s, ResonanceState) else complex(s)
    return out


def ensemble_energy_at(N: float, energies: dict[int, complex]) -> complex:
    J = int(np.floor(N))
    if J == N:
        return energies[J]
    if J not in energies or J + 1 not in energies:
        raise KeyError(f"missing integer state for N={N}")
    w = N - J
    return (1 - w) * energies[J] + w * energies[J + 1]


def en_curve(states, N_range=(0.0, 2.0), samples: int = 201) -> ENCurve:
    """Piecewise-linear complex E(N); ``states`` maps integer N to a
    ResonanceState or a complex energy. E(0) = 0."""
    energies = _integer_energies(states)
    lo, hi = N_range
    ints = list(range(int(np.floor(lo)), int(np.ceil(hi)) + 1))
    missing = [k for k in ints if k not in energies]
    if missing:
        raise KeyError(f"missing integer state(s) {missing} for E(N) on {N_range}")
    Ns = np.union1d(np.linspace(lo, hi, samples), np.array(ints, dtype=float))
    Ns = Ns[(Ns >= lo) & (Ns <= hi)]
    E = np.array([ensemble_energy_at(N, energies) for N in Ns])
    return ENCurve(Ns, E, ints)
