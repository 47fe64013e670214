"""Complex-scaled density-functional resonance theory for a 1D two-electron model."""
from .grid_model import Grid, ModelSystem, PotentialParams, PRESETS, get_preset
from .eigensolve import solve_eigen, solve_ler, theta_trajectory, ResonanceState
from .densities import ComplexDensity, EnsembleSpec, ensemble_density, ensemble_energy, en_curve
from .ks_inverse import invert_ks, xc_potential, hartree_potential, solve_ks_forward, energy_components

__version__ = "0.1.0"
