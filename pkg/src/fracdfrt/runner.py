"""Experiment pipeline: stages, on-disk outputs and the manifest."""
from __future__ import annotations

import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .analysis import IntegerStates, continuity_scan, figure_data, jump_scan, plateau_radii
from .config import ExperimentConfig
from .densities import density_of, en_curve
from .eigensolve import solve_ler, theta_trajectory
from .grid_model import get_preset
from .io import MANIFEST_SCHEMA, config_hash, write_complex_csv, write_csv, write_field, write_json
from .ks_inverse import energy_components, extend_potential, solve_ks_forward

STAGES = ("solve-1e", "solve-2e", "theta-scan", "ensemble", "invert", "jump", "figures")
NEEDS_STATES = {"ensemble", "invert", "jump", "figures"}
NEEDS_N_SCAN = {"invert", "jump", "figures"}


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


def n_tag(N: float) -> str:
    return f"N{N:.6f}"


@dataclass
class RunResult:
    out_dir: Path
    manifest: dict
    files: list[Path] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.manifest["passed"]


class _Run:
    def __init__(self, cfg: ExperimentConfig, out_dir: Path):
        self.cfg = cfg
        self.out = out_dir
        self.system = cfg.system()
        self.states: dict[int, object] = {}
        self.numbers: dict[str, complex | float] = {}
        self.files: list[Path] = []

    def emit(self, paths):
        self.files.extend(paths if isinstance(paths, list) else [paths])

    def solver_kw(self):
        c = self.cfg
        return dict(how_many=c.how_many, tol=c.tol, seed=c.seed, dense_max=c.dense_max, mem_cap=c.mem_cap_gb * 2**30)

    def integer(self, k: int):
        if k not in self.states:
            self.states[k] = solve_ler(self.system, k, **self.solver_kw())
        return self.states[k]

    def integer_states(self) -> IntegerStates:
        return IntegerStates(self.system, {k: self.integer(k)[0] for k in (1, 2)})

    def solve(self, k: int):
        st, spectrum = self.integer(k)
        self.numbers[f"E{k}"] = st.energy
        d = self.out / f"solve-{k}e"
        self.emit(write_json(d / "spectrum.json", {
            "particle_count": k, "theta": st.theta, "ler": st.energy, "width": st.width,
            "lifetime": st.lifetime, "residual": st.residual,
            "eigenvalues": [p.value for p in spectrum], "residuals": [p.residual for p in spectrum],
        }))
        n = density_of(st)
        self.emit(write_complex_csv(d / "density.csv", st.grid.x, n.values))
        self.emit(write_field(d / "state.bin", st.vector, st.grid.h, st.theta))

    def stage_solve_1e(self):
        self.solve(1)

    def stage_solve_2e(self):
        self.solve(2)

    def stage_theta_scan(self):
        thetas = self.cfg.thetas()
        d = self.out / "theta-scan"
        for k in (1, 2):
            st, _ = self.integer(k)
            traj = theta_trajectory(self.system, thetas, st.energy, k, tol=self.cfg.tol, seed=self.cfg.seed)
            spread = float(np.max(np.abs(traj.energies - traj.energies[0])))
            self.numbers[f"theta_variation_{k}e"] = spread
            self.emit(write_csv(d / f"trajectory_{k}e.csv", {
                "theta": traj.thetas, "re_E": traj.energies.real, "im_E": traj.energies.imag}))
            self.emit(write_json(d / f"trajectory_{k}e.json", {
                "optimal_theta": traj.optimal_theta, "stationarity": traj.stationarity, "variation": spread}))

    def stage_ensemble(self):
        S = self.integer_states()
        d = self.out / "ensemble"
        curve = en_curve(S.energies, (0.0, 2.0))
        self.emit(write_csv(d / "energy_vs_N.csv", {
            "N": curve.N_samples, "re_E": curve.energies.real, "im_E": curve.energies.imag}))
        for N in self.cfg.n_values:
            self.emit(write_complex_csv(d / f"density_{n_tag(N)}.csv", self.system.grid.x, S.density(N).values))

    def stage_invert(self):
        S = self.integer_states()
        d = self.out / "invert"
        x = self.system.grid.x
        summary = {}
        for N in self.cfg.n_values:
            if N == 0:
                continue  # no electrons, no KS potential
            dec = S.decomposition(N)
            tag = n_tag(N)
            for name, field_ in (("v_s", dec.v_s), ("v_ext", dec.v_ext_scaled), ("v_H", dec.v_hartree), ("v_xc", dec.v_xc)):
                self.emit(write_complex_csv(d / f"{name}_{tag}.csv", x, field_))
            vs_full = extend_potential(dec, dec.v_ext_scaled)
            orb = solve_ks_forward(vs_full, self.system.grid, self.system.theta, how_many=1,
                                   target=dec.epsilon_homo, order=self.system.order)[0]
            comps = energy_components(S.density(N), self.system, S.energy(N))
            summary[tag] = {
                "N": N, "epsilon_homo": dec.epsilon_homo, "forward_homo": orb.energy,
                "valid_points": int(dec.valid_mask.sum()),
                "T_s": comps.T_s, "E_ext": comps.E_ext, "E_H": comps.E_H, "E_xc": comps.E_xc,
            }
            if N == 2.0:
                self.numbers["eps_homo_2"] = dec.epsilon_homo
        self.emit(write_json(d / "summary.json", summary))

    def stage_jump(self):
        S = self.integer_states()
        c = self.cfg
        rep = jump_scan(S, c.J, c.delta, c.region)
        radii = plateau_radii(S, c.plateau_deltas, c.plateau_tol, J=c.J)
        cont = continuity_scan(S, c.J)
        h_exp, k_exp = cont.exponents()
        self.numbers["delta_mu"] = rep.delta_mu
        self.emit(write_json(self.out / "jump" / "jump.json", {
            "J": rep.J, "delta": rep.delta, "region": c.region, "delta_mu": rep.delta_mu,
            "delta_mu_predicted": rep.delta_mu_predicted, "spread": rep.spread,
            "plateau_radii": {f"{k:g}": v for k, v in radii.items()},
            "continuity": {"deltas": cont.deltas, "hartree": cont.hartree, "kinetic": cont.kinetic,
                           "radius": cont.radius, "hartree_exponent": h_exp, "kinetic_exponent": k_exp},
        }))

    def stage_figures(self):
        S = self.integer_states()
        c = self.cfg
        d = self.out / "figures"
        which = ["fig3"] if c.preset == "paper-A" else ["fig4", "fig5"]
        inputs = {"states": S, "delta": c.delta, "deltas": c.plateau_deltas, "jump": None, "tol": c.plateau_tol, "J": c.J}
        for w in which + ["fig6"]:
            self.emit(figure_data(w, inputs, d))


def headline(cfg: ExperimentConfig, numbers: dict) -> dict:
    """Numbers with built-in targets, each with tolerance and pass flag."""
    out = {}
    targets = get_preset(cfg.preset).targets if cfg.is_preset_system else {}
    for name, value in numbers.items():
        if name not in targets:
            continue
        tgt, (tr, ti) = targets[name]
        v = complex(value)
        ok = abs(v.real - tgt.real) <= tr and abs(v.imag - tgt.imag) <= ti
        out[name] = {"value": v, "target": tgt, "tol_re": tr, "tol_im": ti, "pass": bool(ok)}
    return out


def stages_for(verb: str) -> list[str]:
    if verb == "all":
        return list(STAGES)
    if verb not in STAGES:
        raise ValueError(f"unknown stage {verb!r}")
    pre = ["solve-1e", "solve-2e"] if verb in NEEDS_STATES else []
    return pre + [verb]


def run_experiment(cfg: ExperimentConfig, out_dir=None, stages=None) -> RunResult:
    """Run ``stages`` (default: all) and write outputs plus manifest.json.

    With an empty N-scan the inversion-dependent stages are skipped. A failing
    stage still writes the manifest for the completed stages, then raises
    StageError.
    """
    out = cfg.output_dir(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stages = list(STAGES) if stages is None else list(stages)
    if not cfg.n_values:
        stages = [s for s in stages if s not in NEEDS_N_SCAN]
    run = _Run(cfg, out)
    done, failure = [], None
    for s in stages:
        try:
            getattr(run, "stage_" + s.replace("-", "_"))()
            done.append(s)
        except Exception as e:  # noqa: BLE001 - reported with stage name
            failure = StageError(s, e)
            break
    heads = headline(cfg, run.numbers)
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "config_hash": config_hash(cfg.canonical_text()),
        "config": cfg.canonical_text(),
        "versions": {"fracdfrt": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "stages": done,
        "failed_stage": failure.stage if failure else None,
        "numbers": run.numbers,
        "headline": heads,
        "passed": failure is None and all(h["pass"] for h in heads.values()),
        "outputs": sorted(str(p.relative_to(out)) for p in run.files),
    }
    write_json(out / "manifest.json", manifest)
    if failure:
        raise failure
    return RunResult(out, manifest, run.files)
