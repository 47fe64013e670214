"""Exact complex Kohn-Sham potentials from complex ensemble densities.

For at most two electrons in a singlet the KS system has one spatial orbital
phi = sqrt(n / N), so the KS equation can be inverted pointwise:

    v_s(x) = e^{-2i theta} (d^2 sqrt(n) / dx^2) / (2 sqrt(n)) + eps_homo

The same finite-difference Laplacian is used here and in the forward solve,
which makes the round trip exact at the discrete level.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .densities import ComplexDensity
from .eigensolve import BOUND_TOL, solve_eigen
from .grid_model import Grid, ModelSystem, build_laplacian, external_potential, interaction_potential

DENSITY_FLOOR = 1e-12
MAX_PHASE_STEP = 0.9 * np.pi


class BranchError(ValueError):
    pass


class MultiChannelError(ValueError):
    pass


class TailFitError(RuntimeError):
    pass


def valid_mask(density: ComplexDensity, floor: float = DENSITY_FLOOR) -> np.ndarray:
    return np.abs(density.values) >= floor


def sqrt_density(values: np.ndarray, mask: np.ndarray | None = None, max_phase_step: float = MAX_PHASE_STEP):
    """Square root of a complex density on a continuously tracked branch.

    The phase of n is unwrapped outward from max|n| using principal-value
    steps between neighbours; the root takes half of the unwrapped phase.
    A step larger than ``max_phase_step`` between two points of ``mask``
    means the branch cannot be followed and raises BranchError.
    """
    n = np.asarray(values, dtype=complex)
    if mask is None:
        mask = np.ones(n.shape, dtype=bool)
    amp = np.abs(n)
    k0 = int(np.argmax(amp))
    phase = np.zeros(n.shape)
    phase[k0] = np.angle(n[k0])

    def walk(indices):
        prev = k0
        for k in indices:
            if n[k] == 0:
                phase[k] = phase[prev]
                continue
            step = np.angle(n[k] * np.conj(n[prev])) if n[prev] != 0 else 0.0
            if abs(step) > max_phase_step and mask[k] and mask[prev]:
                raise BranchError(f"phase jump {step:.3f} rad between grid points {prev} and {k}")
            phase[k] = phase[prev] + step
            prev = k

    walk(range(k0 + 1, len(n)))
    walk(range(k0 - 1, -1, -1))
    return np.sqrt(amp) * np.exp(0.5j * phase)


def kinetic_term(density: ComplexDensity, theta: float, order: int = 4, floor: float = DENSITY_FLOOR):
    """e^{-2i theta} lap(sqrt n) / (2 sqrt n) on the valid mask (NaN elsewhere)."""
    mask = valid_mask(density, floor)
    if not mask.any():
        raise ValueError("density is below the floor everywhere")
    s = sqrt_density(density.values, mask)
    lap = build_laplacian(density.grid, order)
    out = np.full(s.shape, np.nan + 0j)
    out[mask] = 0.5 * np.exp(-2j * theta) * (lap @ s)[mask] / s[mask]
    return out, mask


@dataclass
class KSDecomposition:
    v_s: np.ndarray
    epsilon_homo: complex
    valid_mask: np.ndarray
    kinetic: np.ndarray
    v_ext_scaled: np.ndarray | None = None
    v_hartree: np.ndarray | None = None
    v_xc: np.ndarray | None = None

    def check(self, tol: float = 1e-10) -> float:
        """Max |v_s - v_ext - v_H - v_xc| on the valid mask."""
        m = self.valid_mask
        r = self.v_s[m] - self.v_ext_scaled[m] - self.v_hartree[m] - self.v_xc[m]
        err = float(np.max(np.abs(r))) if r.size else 0.0
        if err > tol:
            raise AssertionError(f"KS decomposition violated by {err:.2e}")
        return err


def invert_ks(density: ComplexDensity, theta: float, epsilon_homo: complex, *, order: int = 4,
              floor: float = DENSITY_FLOOR) -> KSDecomposition:
    kin, mask = kinetic_term(density, theta, order, floor)
    eps = complex(epsilon_homo)
    return KSDecomposition(kin + eps, eps, mask, kin)


def hartree_potential(density: ComplexDensity, lam: float, theta: float) -> np.ndarray:
    """v_H(x) = sum_x' v_ee(x' e^{i theta}, x e^{i theta}) n(x') h."""
    z = density.grid.x * np.exp(1j * theta)
    K = interaction_potential(lam, z[:, None], z[None, :])
    return K @ density.values * density.grid.h


def xc_potential(density: ComplexDensity, system: ModelSystem, epsilon_homo: complex, *,
                 floor: float = DENSITY_FLOOR) -> KSDecomposition:
    """Full split v_s = v(x e^{i theta}) + v_H + v_xc, with v_xc by difference."""
    if density.grid != system.grid:
        raise ValueError("density and system grids differ")
    dec = invert_ks(density, system.theta, epsilon_homo, order=system.order, floor=floor)
    v_ext = system.v_ext_scaled()
    v_h = hartree_potential(density, system.lam, system.theta)
    v_xc = np.where(dec.valid_mask, dec.v_s - v_ext - v_h, np.nan + 0j)
    dec.v_ext_scaled, dec.v_hartree, dec.v_xc = v_ext, v_h, v_xc
    return dec


def extend_potential(dec: KSDecomposition, v_ext_scaled: np.ndarray) -> np.ndarray:
    """v_s on the whole grid: masked runs take v_ext plus the constant offset
    v_s - v_ext found at the neighbouring valid point."""
    m = dec.valid_mask
    if not m.any():
        raise ValueError("no valid points to extend from")
    out = np.array(dec.v_s, dtype=complex)
    valid_idx = np.flatnonzero(m)
    offset = dec.v_s[valid_idx] - v_ext_scaled[valid_idx]
    for k in np.flatnonzero(~m):
        j = int(np.argmin(np.abs(valid_idx - k)))
        out[k] = v_ext_scaled[k] + offset[j]
    return out


@dataclass
class EnergyComponents:
    T_s: complex
    E_ext: complex
    E_H: complex
    E_xc: complex
    E_total: complex

    @property
    def E_hxc(self) -> complex:
        return self.E_H + self.E_xc


def energy_components(density: ComplexDensity, system: ModelSystem, energy_total: complex) -> EnergyComponents:
    """KS split of a known ensemble energy.

    T_s uses the c-product form -1/2 e^{-2i theta} sum s lap(s) h with
    s = sqrt(n), i.e. N times the single-orbital value. E_H carries
    e^{-i theta} times the unscaled soft-Coulomb double integral.
    E_xc closes the sum.
    """
    th = system.theta
    h = density.grid.h
    s = sqrt_density(density.values, valid_mask(density))
    lap = build_laplacian(density.grid, system.order)
    T_s = complex(-0.5 * np.exp(-2j * th) * np.sum(s * (lap @ s)) * h)
    E_ext = complex(np.sum(density.values * system.v_ext_scaled()) * h)
    x = density.grid.x
    K = interaction_potential(system.lam, x[:, None], x[None, :])
    E_H = complex(np.exp(-1j * th) * 0.5 * density.values @ K @ density.values * h * h)
    E_tot = complex(energy_total)
    return EnergyComponents(T_s, E_ext, E_H, E_tot - T_s - E_ext - E_H, E_tot)


def homo_energy(case: str, *, I: complex | None = None, A: float | None = None, width: float | None = None,
                eps_th: complex = 0j) -> complex:
    """KS HOMO energy by physical case.

    ``bound``: -I. ``metastable``: (-A - i width/2) + eps_th for a single
    dominant decay channel. ``multi-channel`` is not determined by these
    quantities and raises.
    """
    if case == "bound":
        return -complex(I)
    if case == "metastable":
        return complex(-A - 0.5j * width) + complex(eps_th)
    if case in ("multi-channel", "multiple"):
        raise MultiChannelError("HOMO energy is dependent on partial widths / branching ratios")
    raise ValueError(f"unknown case {case!r}")


def homo_for_ensemble(N: float, energies: dict[int, complex], *, eps_th: complex = 0j,
                      bound_tol: float = BOUND_TOL) -> complex:
    """HOMO of the ensemble at N in (J, J+1] from the integer energies (E_0 = 0)."""
    if N <= 0:
        raise ValueError("HOMO undefined at N <= 0")
    J = int(np.ceil(N)) - 1
    E = {0: 0j, **{int(k): complex(v) for k, v in energies.items()}}
    lo, hi = E[J], E[J + 1]
    if abs(hi.imag) < bound_tol:
        return homo_energy("bound", I=lo - hi)
    return homo_energy("metastable", A=(lo - hi).real, width=-2.0 * (hi - lo).imag, eps_th=eps_th)


def xi_functional(lower_orbital_energies, e_hxc: complex, v_hxc: np.ndarray, density: ComplexDensity,
                  mask: np.ndarray | None = None) -> complex:
    """xi = sum of non-HOMO orbital energies + E_Hxc - integral v_Hxc n."""
    if mask is None:
        mask = np.isfinite(v_hxc)
    integral = np.sum(v_hxc[mask] * density.values[mask]) * density.grid.h
    return complex(np.sum(np.asarray(lower_orbital_energies, dtype=complex)) + e_hxc - integral)


def threshold_energy(E_J: complex, xi: complex) -> complex:
    return complex(E_J) - complex(xi)


@dataclass
class KSOrbital:
    energy: complex
    orbital: np.ndarray  # c-normalized: sum(phi**2) h = 1

    @property
    def resonance_energy(self) -> float:
        return float(self.energy.real)

    @property
    def tau(self) -> float:
        # Im(energy) = -2 / tau
        return np.inf if self.energy.imag == 0 else float(-2.0 / self.energy.imag)


def ks_operator(v_s: np.ndarray, grid: Grid, theta: float, order: int = 4) -> sp.csr_matrix:
    lap = build_laplacian(grid, order)
    return ((-0.5 * np.exp(-2j * theta)) * lap.astype(complex) + sp.diags(v_s)).tocsr()


def ks_block_operator(v_s: np.ndarray, grid: Grid, theta: float, order: int = 4) -> np.ndarray:
    """Real 2n x 2n form [[h1, -h2], [h2, h1]] acting on (Re phi, Im phi)."""
    lap = build_laplacian(grid, order).toarray()
    h1 = -0.5 * np.cos(2 * theta) * lap + np.diag(v_s.real)
    h2 = 0.5 * np.sin(2 * theta) * lap + np.diag(v_s.imag)
    return np.block([[h1, -h2], [h2, h1]])


def solve_ks_forward(v_s: np.ndarray, grid: Grid, theta: float, *, how_many: int = 4, target=None,
                     order: int = 4, representation: str = "complex", tol: float = 1e-9) -> list[KSOrbital]:
    """KS orbitals and complex orbital energies of a full-grid potential."""
    v_s = np.asarray(v_s, dtype=complex)
    if not np.all(np.isfinite(v_s)):
        raise ValueError("v_s must be finite on the whole grid; see extend_potential")
    sqh = np.sqrt(grid.h)
    if representation == "complex":
        pairs = solve_eigen(ks_operator(v_s, grid, theta, order), how_many, target, tol=tol)
        return [KSOrbital(p.value, p.vector / sqh) for p in pairs]
    if representation != "block":
        raise ValueError(f"unknown representation {representation!r}")
    n = grid.n_points
    w, V = sla.eig(ks_block_operator(v_s, grid, theta, order))
    # eigenvalue E of h1 + i h2 appears with eigenvector (phi, -i phi); E* with (phi, i phi)
    a, b = V[:n], V[n:]
    match = np.linalg.norm(b + 1j * a, axis=0) < np.linalg.norm(b - 1j * a, axis=0)
    w, a = w[match], a[:, match]
    order_idx = np.argsort(w.real) if target is None else np.argsort(np.abs(w - target))
    out = []
    for k in order_idx[:how_many]:
        phi = a[:, k] / np.sqrt(a[:, k] @ a[:, k])
        out.append(KSOrbital(complex(w[k]), phi / sqh))
    return out


def block_spectrum(v_s: np.ndarray, grid: Grid, theta: float, order: int = 4) -> np.ndarray:
    return sla.eigvals(ks_block_operator(np.asarray(v_s, dtype=complex), grid, theta, order))


def tail_wavenumber(density: ComplexDensity, theta: float, fit_window: tuple[float, float], *, side: str = "left",
                    max_rms: float = 0.05, floor: float = DENSITY_FLOOR) -> complex:
    """Fit n(x) ~ C^2 exp(2 i k r e^{i theta}) with r = |x| on one side.

    The complex log uses the phase unwrapped along r. Returns k; a bound
    state gives k = i kappa with n decaying like exp(-2 kappa r).
    """
    x = density.grid.x
    r = -x if side == "left" else x
    sel = (r >= fit_window[0]) & (r <= fit_window[1]) & (np.abs(density.values) >= floor)
    if sel.sum() < 3:
        raise TailFitError("fewer than 3 usable points in the fit window")
    idx = np.flatnonzero(sel)
    idx = idx[np.argsort(r[idx])]
    n = density.values[idx]
    logn = np.log(np.abs(n)) + 1j * np.unwrap(np.angle(n))
    rr = r[idx]
    Amat = np.vstack([np.ones_like(rr), rr]).T
    coef, *_ = np.linalg.lstsq(Amat.astype(complex), logn, rcond=None)
    resid = logn - Amat @ coef
    rms = float(np.sqrt(np.mean(np.abs(resid) ** 2)))
    if rms > max_rms:
        raise TailFitError(f"tail fit rms residual {rms:.3g} > {max_rms}; try a larger box or a farther window")
    return complex(coef[1] / (2j * np.exp(1j * theta)))
