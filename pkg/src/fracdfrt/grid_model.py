"""Real-space grid, model external potential and soft-Coulomb interaction.

Hartree atomic units throughout: energies in hartree, lengths in bohr.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

# Exponent magnitude beyond which the sigmoid is saturated.
EXP_CLAMP = 700.0

MAX_THETA = np.pi / 4


@dataclass(frozen=True)
class Grid:
    """Uniform 1D mesh with ``n_points`` nodes from ``x_min`` to ``x_max``.

    Wavefunctions are pinned to zero one spacing beyond either end
    (Dirichlet walls), so every node is an unknown.
    """

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 5:
            raise ValueError(f"n_points must be >= 5, got {self.n_points}")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.x_max - self.x_min)

    @property
    def is_symmetric(self) -> bool:
        return np.isclose(self.x_min, -self.x_max)

    def refined(self) -> "Grid":
        """Same box with the spacing halved."""
        return Grid(self.x_min, self.x_max, 2 * self.n_points - 1)

    @classmethod
    def symmetric(cls, half_width: float, h: float) -> "Grid":
        n = int(round(2 * half_width / h)) + 1
        return cls(-half_width, half_width, n)


@dataclass(frozen=True)
class PotentialParams:
    """Constants of the step-plus-Gaussian model potential."""

    a: float
    alpha: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError(f"Gaussian width b must be positive, got {self.b}")


def check_theta(theta: float) -> float:
    theta = float(theta)
    if not 0.0 <= theta < MAX_THETA:
        raise ValueError(f"scaling angle must satisfy 0 <= theta < pi/4, got {theta}")
    return theta


@dataclass(frozen=True)
class ModelSystem:
    grid: Grid
    params: PotentialParams
    lam: float = 1.0
    theta: float = 0.0
    order: int = 4

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"interaction strength must be >= 0, got {self.lam}")
        check_theta(self.theta)
        if self.order not in (2, 4):
            raise ValueError(f"stencil order must be 2 or 4, got {self.order}")

    def with_theta(self, theta: float) -> "ModelSystem":
        return ModelSystem(self.grid, self.params, self.lam, theta, self.order)

    def with_grid(self, grid: Grid) -> "ModelSystem":
        return ModelSystem(grid, self.params, self.lam, self.theta, self.order)

    def with_lambda(self, lam: float) -> "ModelSystem":
        return ModelSystem(self.grid, self.params, lam, self.theta, self.order)

    @property
    def rotation(self) -> complex:
        return np.exp(1j * self.theta)

    @property
    def scaled_x(self) -> np.ndarray:
        return self.grid.x * self.rotation

    def v_ext_scaled(self) -> np.ndarray:
        return external_potential(self.params, self.scaled_x)

    def asymptotes(self) -> tuple[float, float]:
        """Real-axis potential at the two grid ends (continuum thresholds)."""
        v = external_potential(self.params, np.array([self.grid.x_min, self.grid.x_max]))
        return float(v[0].real), float(v[1].real)


def _sigmoid(u):
    # 1 / (1 + e^u) with Re(u) clamped so the result saturates instead of overflowing
    u = np.asarray(u, dtype=complex)
    u = np.clip(u.real, -EXP_CLAMP, EXP_CLAMP) + 1j * u.imag
    return 1.0 / (1.0 + np.exp(u))


def external_potential(params: PotentialParams, z):
    """v(z) = a * sum_j [1 + exp(-2c(z + (-1)^j d))]^-1 - alpha * exp(-z^2/b).

    ``z`` may be real or complex (``x * exp(i theta)`` for the scaled potential).
    Returns a complex array; for real ``z`` the imaginary part is exactly zero.
    """
    z = np.asarray(z, dtype=complex)
    steps = _sigmoid(-2 * params.c * (z - params.d)) + _sigmoid(-2 * params.c * (z + params.d))
    out = params.a * steps - params.alpha * np.exp(-(z**2) / params.b)
    if np.iscomplexobj(z) and np.all(z.imag == 0):
        out = out.real + 0j
    return out


def interaction_potential(lam: float, z1, z2):
    """Soft-Coulomb repulsion lam / sqrt(1 + (z1 - z2)^2), principal branch.

    Raises ValueError if any argument of the square root sits on the
    negative real axis, where the principal branch would jump.
    """
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    arg = 1.0 + (z1 - z2) ** 2
    on_cut = (arg.real < 0) & (np.abs(arg.imag) <= 1e-12 * np.abs(arg))
    if np.any(on_cut):
        idx = np.argwhere(np.broadcast_to(on_cut, arg.shape))[0]
        p1 = np.broadcast_to(z1, arg.shape)[tuple(idx)]
        p2 = np.broadcast_to(z2, arg.shape)[tuple(idx)]
        raise ValueError(f"soft-Coulomb square root crosses its branch cut at z1={p1}, z2={p2}")
    if lam == 0:
        return np.zeros(arg.shape, dtype=complex)
    return lam / np.sqrt(arg)


_STENCILS = {
    2: np.array([1.0, -2.0, 1.0]),
    4: np.array([-1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12]),
}


def build_laplacian(grid: Grid, order: int = 4) -> sp.csr_matrix:
    """Central finite-difference d^2/dx^2 with Dirichlet walls.

    The walls sit one spacing outside the end nodes. Returned as a real
    symmetric banded sparse matrix.
    """
    if order not in _STENCILS:
        raise ValueError(f"stencil order must be 2 or 4, got {order}")
    coef = _STENCILS[order]
    half = len(coef) // 2
    n = grid.n_points
    if n <= 2 * half:
        raise ValueError(f"n_points={n} too small for order-{order} stencil")
    offsets = list(range(-half, half + 1))
    diags = [np.full(n - abs(o), c) for o, c in zip(offsets, coef)]
    if order == 4:
        # the wall node is zero; the node beyond it mirrors the first interior
        # node with opposite sign, which keeps the wall where it belongs
        diags[half][0] -= coef[0]
        diags[half][-1] -= coef[0]
    return (sp.diags(diags, offsets, shape=(n, n)) / grid.h**2).tocsr()


@dataclass(frozen=True)
class Preset:
    name: str
    params: PotentialParams
    grid: Grid
    lam: float = 1.0
    theta: float = 0.35
    targets: dict = field(default_factory=dict)

    def system(self, theta: float | None = None) -> ModelSystem:
        return ModelSystem(self.grid, self.params, self.lam, self.theta if theta is None else theta)


# Target values, tolerances as (Re tol, Im tol).
PRESETS = {
    "paper-A": Preset(
        "paper-A",
        PotentialParams(a=0.0, alpha=9.0, b=0.5, c=0.0, d=0.0),
        Grid(-12.0, 12.0, 241),
        targets={
            "E1": (-6.38 + 0j, (0.01, 0.01)),
            "E2": (-11.84 + 0j, (0.01, 0.01)),
            "delta_mu": (0.92 + 0j, (0.02, 1e-3)),
        },
    ),
    "paper-B": Preset(
        "paper-B",
        PotentialParams(a=0.75, alpha=6.0, b=0.05, c=4.0, d=3.0),
        Grid(-25.0, 25.0, 501),
        targets={
            "E1": (-0.86 + 0j, (0.01, 0.01)),
            "E2": (-0.63 - 0.066j, (0.01, 0.005)),
            "delta_mu": (0.69 - 0.15j, (0.02, 0.02)),
            "eps_homo_2": (-0.17 - 0.15j, (0.02, 0.02)),
        },
    ),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None
