"""Derivative-discontinuity measurements on fractional-N ensembles."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .densities import ComplexDensity, density_of, en_curve, ensemble_energy_at, mix_densities
from .eigensolve import ResonanceState, solve_ler
from .grid_model import ModelSystem
from .io import write_csv, write_json
from .ks_inverse import KSDecomposition, homo_for_ensemble, kinetic_term, hartree_potential, xc_potential

DEFAULT_DELTA = 1e-3
DEFAULT_REGION = 0.2


class NoPlateauError(RuntimeError):
    pass


@dataclass
class IntegerStates:
    """Solved 1- and 2-electron states of one system (the 0-electron end is the vacuum)."""

    system: ModelSystem
    states: dict[int, ResonanceState]

    @property
    def energies(self) -> dict[int, complex]:
        return {0: 0j, **{k: complex(s.energy) for k, s in self.states.items()}}

    @property
    def densities(self) -> dict[int, ComplexDensity]:
        return {k: density_of(s) for k, s in self.states.items()}

    def density(self, N: float) -> ComplexDensity:
        return mix_densities(N, self.densities)

    def energy(self, N: float) -> complex:
        return ensemble_energy_at(N, self.energies)

    def homo(self, N: float, eps_th: complex = 0j) -> complex:
        return homo_for_ensemble(N, self.energies, eps_th=eps_th)

    def decomposition(self, N: float) -> KSDecomposition:
        return xc_potential(self.density(N), self.system, self.homo(N))


def solve_integer_states(system: ModelSystem, max_electrons: int = 2, **kw) -> IntegerStates:
    states = {}
    for k in range(1, max_electrons + 1):
        states[k], _ = solve_ler(system, k, **kw)
    return IntegerStates(system, states)


def central_region(system: ModelSystem, fraction: float) -> np.ndarray:
    """Mask of the central ``fraction`` of the box, centred on x=0."""
    if not 0 < fraction <= 1:
        raise ValueError("region fraction must be in (0, 1]")
    x = system.grid.x
    return np.abs(x) <= fraction * system.grid.half_width + 1e-12


@dataclass
class JumpReport:
    J: int
    delta: float
    delta_mu: complex
    delta_mu_predicted: complex
    spread: float
    plateau_radii: dict[float, float] = field(default_factory=dict)
    tolerance: complex = 0.02 + 0.02j

    @property
    def passed(self) -> bool:
        d = self.delta_mu - self.delta_mu_predicted
        return abs(d.real) <= self.tolerance.real and abs(d.imag) <= self.tolerance.imag


def jump_scan(states: IntegerStates, J: int = 1, delta: float = DEFAULT_DELTA, region: float = DEFAULT_REGION,
              tolerance: complex = 0.02 + 0.02j) -> JumpReport:
    """Median of v_xc(J+delta) - v_xc(J-delta) over the central region.

    The prediction is the HOMO jump E_{J+1} - 2 E_J + E_{J-1} implied by the
    integer energies.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must be in (0, 1)")
    above = states.decomposition(J + delta)
    below = states.decomposition(J - delta)
    sel = central_region(states.system, region) & above.valid_mask & below.valid_mask
    if not sel.any():
        raise NoPlateauError("no valid points in the central region")
    diff = (above.v_xc - below.v_xc)[sel]
    mu = complex(np.median(diff.real), np.median(diff.imag))
    spread = float(max(np.ptp(diff.real), np.ptp(diff.imag)))
    limit = 10 * max(tolerance.real, tolerance.imag)
    if spread > limit:
        raise NoPlateauError(f"no plateau: v_xc difference varies by {spread:.3g} over the region (limit {limit:.3g})")
    E = states.energies
    predicted = (E[J + 1] - E[J]) - (E[J] - E[J - 1])
    return JumpReport(J, delta, mu, complex(predicted), spread, tolerance=tolerance)


def plateau_radius(v_xc_above: np.ndarray, v_xc_below: np.ndarray, jump: complex, tol: float, x: np.ndarray) -> float:
    """Largest |x| out to which the v_xc difference stays within ``tol`` of ``jump``.

    Masked (NaN) points count as outside the plateau.
    """
    if v_xc_above.shape != v_xc_below.shape or v_xc_above.shape != x.shape:
        raise ValueError("fields must share the grid")
    dev = np.abs((v_xc_above - v_xc_below) - jump)
    ok = np.isfinite(dev) & (dev < tol)
    r = np.abs(x)
    idx = np.argsort(r, kind="stable")
    bad = np.flatnonzero(~ok[idx])
    if bad.size == 0:
        return float(r.max())
    if bad[0] == 0:
        warnings.warn("no grid point is within tolerance of the jump; plateau radius is 0")
        return 0.0
    return float(r[idx[bad[0] - 1]])


def center_jump(above: KSDecomposition, below: KSDecomposition, x: np.ndarray) -> complex:
    k = int(np.argmin(np.abs(x)))
    return complex(above.v_xc[k] - below.v_xc[k])


def plateau_radii(states: IntegerStates, deltas, tol: float, jump: complex | None = None, J: int = 1) -> dict[float, float]:
    """Plateau radius per delta. With ``jump=None`` each delta is compared
    with its own v_xc difference at x=0, so only the plateau's extent is measured."""
    x = states.system.grid.x
    out = {}
    for d in deltas:
        hi, lo = states.decomposition(J + d), states.decomposition(J - d)
        ref = center_jump(hi, lo, x) if jump is None else jump
        out[d] = plateau_radius(hi.v_xc, lo.v_xc, ref, tol, x)
    return out


@dataclass
class ContinuityReport:
    deltas: np.ndarray
    hartree: np.ndarray
    kinetic: np.ndarray
    radius: float

    def exponents(self) -> tuple[float, float]:
        ld = np.log(self.deltas)
        return (float(np.polyfit(ld, np.log(self.hartree), 1)[0]),
                float(np.polyfit(ld, np.log(self.kinetic), 1)[0]))


def continuity_scan(states: IntegerStates, J: int = 1, deltas=(1e-2, 1e-3, 1e-4), region: float | None = None,
                    plateau_tol: float = 0.02) -> ContinuityReport:
    """Max change of v_H and of the kinetic term across N = J +/- delta.

    By default the maximum is taken over the v_xc plateau of the largest
    delta, where the ensemble is still in its linear regime; pass
    ``region`` to use a fixed central fraction instead.
    """
    sys = states.system
    if region is None:
        r = plateau_radii(states, [max(deltas)], plateau_tol, J=J)[max(deltas)]
        sel = np.abs(sys.grid.x) <= r + 1e-12
    else:
        sel = central_region(sys, region)
    hs, ks = [], []
    for d in deltas:
        na, nb = states.density(J + d), states.density(J - d)
        hs.append(np.max(np.abs(hartree_potential(na, sys.lam, sys.theta) - hartree_potential(nb, sys.lam, sys.theta))[sel]))
        ka, ma = kinetic_term(na, sys.theta, sys.order)
        kb, mb = kinetic_term(nb, sys.theta, sys.order)
        m = sel & ma & mb
        ks.append(np.max(np.abs(ka - kb)[m]))
    return ContinuityReport(np.array(deltas, dtype=float), np.array(hs), np.array(ks), float(np.abs(sys.grid.x[sel]).max()))


FIGURES = ("fig3", "fig4", "fig5", "fig6")
_NEEDS = {
    "fig3": ("states", "delta"),
    "fig4": ("states", "delta"),
    "fig5": ("states", "deltas", "jump", "tol"),
    "fig6": ("states",),
}


def figure_data(which: str, inputs: dict, out_dir) -> list[Path]:
    """Plot-ready CSV (plus a sidecar JSON of annotations) for one figure."""
    if which not in _NEEDS:
        raise ValueError(f"unknown figure {which!r}; choose from {FIGURES}")
    missing = [k for k in _NEEDS[which] if k not in inputs]
    if missing:
        raise KeyError(f"{which} needs inputs {missing}")
    out_dir = Path(out_dir)
    st: IntegerStates = inputs["states"]
    sys = st.system
    x = sys.grid.x
    J = inputs.get("J", 1)
    notes = {"figure": which, "theta": sys.theta}
    if which in ("fig3", "fig4"):
        d = inputs["delta"]
        lo, hi = st.decomposition(J - d), st.decomposition(J + d)
        cols = {"x": x, "re_vxc_below": lo.v_xc.real, "im_vxc_below": lo.v_xc.imag,
                "re_vxc_above": hi.v_xc.real, "im_vxc_above": hi.v_xc.imag}
        rep = jump_scan(st, J, d)
        notes.update(delta=d, N_below=J - d, N_above=J + d, jump=rep.delta_mu, jump_predicted=rep.delta_mu_predicted)
    elif which == "fig5":
        cols = {"x": x}
        radii = {}
        for d in inputs["deltas"]:
            hi, lo = st.decomposition(J + d), st.decomposition(J - d)
            tag = f"{d:.0e}"
            cols[f"re_vxc_above_{tag}"] = hi.v_xc.real
            cols[f"im_vxc_above_{tag}"] = hi.v_xc.imag
            cols[f"re_vxc_below_{tag}"] = lo.v_xc.real
            ref = center_jump(hi, lo, x) if inputs["jump"] is None else inputs["jump"]
            radii[tag] = plateau_radius(hi.v_xc, lo.v_xc, ref, inputs["tol"], x)
        notes.update(deltas=list(inputs["deltas"]), jump=inputs["jump"], tol=inputs["tol"], plateau_radii=radii)
    else:
        curve = en_curve(st.energies, (0.0, max(st.states)), inputs.get("samples", 201))
        cols = {"N": curve.N_samples, "re_E": curve.energies.real, "im_E": curve.energies.imag}
        notes.update(breakpoints=curve.breakpoints, energies=st.energies, slopes={f"{a}-{b}": s for (a, b), s in curve.slopes().items()})
    return [write_csv(out_dir / f"{which}.csv", cols), write_json(out_dir / f"{which}.json", notes)]
