"""Complex-scaled one- and two-electron Hamiltonians and their resonances.

All operators are complex symmetric (``H == H.T``), so the left eigenvector
is the plain transpose of the right one and every inner product below is
the bilinear c-product ``u @ v`` with no conjugation.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid_model import Grid, ModelSystem, build_laplacian, interaction_potential

BOUND_TOL = 1e-6
DENSE_MAX = 3000
SHIFT_OFFSET = 5e-3
DEFAULT_MEM_CAP = 3.0 * 2**30


class EigenSolveError(RuntimeError):
    def __init__(self, message, best_residual=None):
        super().__init__(message)
        self.best_residual = best_residual


class NoResonanceError(RuntimeError):
    def __init__(self, message, lowest=()):
        super().__init__(f"{message}; lowest-Re eigenvalues: {list(lowest)}")
        self.lowest = list(lowest)


class TrajectoryJumpError(RuntimeError):
    pass


@dataclass
class ScaledHamiltonian:
    matrix: sp.csr_matrix
    particle_count: int
    system: ModelSystem
    re_lower_bound: float
    # (i, j) grid indices with i <= j for each basis function of the 2e half-grid
    pairs: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def grid(self) -> Grid:
        return self.system.grid

    def to_field(self, vec: np.ndarray) -> np.ndarray:
        """Map a c-normalized basis vector to the grid field with
        ``sum(field**2) * h**dims == 1``."""
        h = self.grid.h
        if self.particle_count == 1:
            return vec / math.sqrt(h)
        n = self.grid.n_points
        i, j = self.pairs
        w = np.where(i == j, 1.0, 1.0 / math.sqrt(2.0))
        psi = np.zeros((n, n), dtype=complex)
        psi[i, j] = w * vec
        psi[j, i] = w * vec
        return psi / h


def build_hamiltonian_1e(system: ModelSystem) -> ScaledHamiltonian:
    """e^{-2i theta} (-1/2 d^2/dx^2) + v(x e^{i theta}) on the grid."""
    lap = build_laplacian(system.grid, system.order)
    v = system.v_ext_scaled()
    H = (-0.5 * np.exp(-2j * system.theta)) * lap.astype(complex) + sp.diags(v)
    return ScaledHamiltonian(H.tocsr(), 1, system, float(v.real.min()))


def lu_memory_estimate(dim: int) -> float:
    """Bytes needed by a sparse complex LU of a 2D grid operator of size ``dim``.

    Empirical fill for minimum-degree ordering is ~16 ln(dim) entries per row;
    doubled for the factorization workspace.
    """
    nnz = 16.0 * dim * math.log(max(dim, 2))
    return 2.0 * nnz * (16 + 4)


def pair_dimension(n: int) -> int:
    return n * (n + 1) // 2


def build_hamiltonian_2e(system: ModelSystem, mem_cap: float = DEFAULT_MEM_CAP) -> ScaledHamiltonian:
    """Two-electron singlet Hamiltonian on the x1 <= x2 half of the pair grid.

    The basis is e_ii and (e_ij + e_ji)/sqrt(2), which is real orthonormal, so
    the projected operator stays complex symmetric.
    """
    n = system.grid.n_points
    dim = pair_dimension(n)
    need = lu_memory_estimate(dim)
    if need > mem_cap:
        n_ok = n
        while n_ok > 5 and lu_memory_estimate(pair_dimension(n_ok)) > mem_cap:
            n_ok = int(n_ok * 0.95)
        raise MemoryError(
            f"2e problem with n_points={n} needs ~{need / 2**30:.1f} GiB (cap "
            f"{mem_cap / 2**30:.1f} GiB); reduce n_points to <= {n_ok}"
        )
    h1 = build_hamiltonian_1e(system)
    one = h1.matrix
    eye = sp.identity(n, format="csr", dtype=complex)
    z = system.scaled_x
    vee = interaction_potential(system.lam, z[:, None], z[None, :])
    full = sp.kron(one, eye, format="csr") + sp.kron(eye, one, format="csr") + sp.diags(vee.ravel())

    i, j = np.triu_indices(n)
    cols = np.arange(dim)
    off = i != j
    w = np.where(off, 1.0 / math.sqrt(2.0), 1.0)
    rows = np.concatenate([i * n + j, (j * n + i)[off]])
    P = sp.csr_matrix((np.concatenate([w, w[off]]), (rows, np.concatenate([cols, cols[off]]))), shape=(n * n, dim))
    H = (P.T @ full @ P).tocsr()
    # enforce exact symmetry against round-off in the triple product
    H = ((H + H.T) * 0.5).tocsr()
    bound = 2.0 * h1.re_lower_bound + float(vee.real.min())
    return ScaledHamiltonian(H, 2, system, bound, (i, j))


@dataclass
class EigenPair:
    value: complex
    vector: np.ndarray  # c-normalized in the matrix basis
    residual: float
    near_degenerate: bool = False


def _c_normalize(v: np.ndarray) -> np.ndarray:
    nrm = np.sqrt(v @ v)
    if abs(nrm) < 1e-150:
        raise EigenSolveError("eigenvector has (near) zero c-norm; quasi-null vector")
    v = v / nrm
    # fix the overall sign so the largest component has positive real part
    k = int(np.argmax(np.abs(v)))
    if v[k].real < 0:
        v = -v
    return v


def _residual(A, lam, v) -> float:
    r = A @ v - lam * v
    return float(np.linalg.norm(r) / np.linalg.norm(v))


def _order(values, target):
    values = np.asarray(values)
    if target is None:
        return np.lexsort((values.imag, values.real))
    return np.argsort(np.abs(values - target), kind="stable")


def _flag_degenerate(pairs: list[EigenPair], rel=1e-8):
    for a in range(len(pairs)):
        for b in range(a + 1, len(pairs)):
            va, vb = pairs[a].value, pairs[b].value
            if abs(va - vb) < rel * max(1.0, abs(va)):
                pairs[a].near_degenerate = pairs[b].near_degenerate = True
    if any(p.near_degenerate for p in pairs):
        warnings.warn("near-degenerate eigenvalue cluster; c-orthogonality of the flagged pairs is not guaranteed")


def _effective_tol(A, tol) -> float:
    """``tol`` unless that is below what float64 can resolve for this operator."""
    norm1 = spla.norm(A, 1) if sp.issparse(A) else np.linalg.norm(A, 1)
    return max(tol, 64 * np.finfo(float).eps * float(norm1))


def _dense_eig(A: np.ndarray, how_many, target, tol):
    tol = _effective_tol(A, tol)
    w, V = sla.eig(A)
    idx = _order(w, target)[:how_many]
    out = []
    for k in idx:
        v = _c_normalize(V[:, k])
        out.append(EigenPair(complex(w[k]), v, _residual(A, w[k], v)))
    bad = [p.residual for p in out if p.residual > tol]
    if bad:
        raise EigenSolveError(f"dense solve residual {max(bad):.2e} above tolerance {tol:.1e}", max(bad))
    return out


def _c_lanczos(op, dim, m, v0):
    """m steps of complex-symmetric Lanczos on ``op`` with full c-re-orthogonalization."""
    V = np.zeros((m + 1, dim), dtype=complex)
    alpha = np.zeros(m, dtype=complex)
    beta = np.zeros(m, dtype=complex)
    V[0] = v0 / np.sqrt(v0 @ v0)
    k = m
    for j in range(m):
        w = op(V[j])
        alpha[j] = V[j] @ w
        w = w - alpha[j] * V[j]
        if j > 0:
            w = w - beta[j - 1] * V[j - 1]
        for _ in range(2):
            w = w - V[: j + 1].T @ (V[: j + 1] @ w)
        bb = np.sqrt(w @ w)
        beta[j] = bb
        if abs(bb) < 1e-13 * max(1.0, np.linalg.norm(w)) or abs(bb) < 1e-300:
            k = j + 1
            break
        V[j + 1] = w / bb
    T = np.diag(alpha[:k]) + np.diag(beta[: k - 1], 1) + np.diag(beta[: k - 1], -1)
    return V[:k], T


def _shift_invert(A: sp.csr_matrix, how_many, sigma, tol, seed, max_restarts):
    dim = A.shape[0]
    tol = _effective_tol(A, tol)
    lu = spla.splu((A - sigma * sp.identity(dim, format="csr")).tocsc(), permc_spec="MMD_AT_PLUS_A")
    op = lu.solve
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(dim) + 0j
    m = min(dim, max(2 * how_many + 20, 40))
    best = np.inf
    for _ in range(max_restarts + 1):
        V, T = _c_lanczos(op, dim, m, v0)
        mu, Y = sla.eig(T)
        keep = np.abs(mu) > 1e-300
        vals = sigma + 1.0 / mu[keep]
        Y = Y[:, keep]
        idx = np.argsort(-np.abs(mu[keep]), kind="stable")[:how_many]
        pairs = []
        for k in idx:
            x = Y[:, k] @ V
            lam = complex(vals[k])
            # two steps of shifted inverse iteration polish the Ritz pair
            for _ in range(2):
                x = op(x)
                x = x / np.linalg.norm(x)
                lam = complex((x @ (A @ x)) / (x @ x))
            try:
                x = _c_normalize(x)
            except EigenSolveError:
                continue
            pairs.append(EigenPair(lam, x, _residual(A, lam, x)))
        res = [p.residual for p in pairs]
        if len(pairs) == how_many and max(res) < tol:
            return pairs
        best = min(best, max(res) if res else np.inf)
        v0 = sum(p.vector for p in pairs) if pairs else rng.standard_normal(dim) + 0j
        m = min(dim, int(m * 1.5))
    raise EigenSolveError(f"shift-invert Lanczos did not converge; best residual {best:.2e}", best)


def solve_eigen(
    H: ScaledHamiltonian | np.ndarray | sp.spmatrix,
    how_many: int,
    target: complex | None = None,
    *,
    tol: float = 1e-10,
    dense_max: int = DENSE_MAX,
    seed: int = 0,
    max_restarts: int = 4,
) -> list[EigenPair]:
    """Eigenpairs of a complex-symmetric operator.

    Sorted by Re(E) ascending when ``target`` is None, else by distance to
    ``target``. Dense LAPACK for ``dim <= dense_max``; otherwise shift-invert
    c-Lanczos around ``target`` (or a lower bound of the spectrum's real part).
    """
    A = H.matrix if isinstance(H, ScaledHamiltonian) else H
    dim = A.shape[0]
    if how_many > dim:
        raise ValueError(f"how_many={how_many} exceeds dimension {dim}")
    if dim <= dense_max:
        dense = A.toarray() if sp.issparse(A) else np.asarray(A)
        pairs = _dense_eig(dense.astype(complex), how_many, target, tol)
    else:
        A = sp.csr_matrix(A, dtype=complex)
        if target is None:
            if isinstance(H, ScaledHamiltonian):
                sigma = complex(H.re_lower_bound - 0.1)
            else:
                sigma = complex(spla.eigs(A, k=1, which="SR", return_eigenvectors=False)[0].real - 0.1)
        else:
            # a shift sitting on an eigenvalue makes the inverse so lopsided
            # that the other Ritz pairs stall; step slightly off the target
            sigma = complex(target) - SHIFT_OFFSET * (1.0 + abs(target))
        pairs = _shift_invert(A, how_many, sigma, tol, seed, max_restarts)
        pairs = [pairs[k] for k in _order([p.value for p in pairs], target)]
    _flag_degenerate(pairs)
    return pairs


@dataclass
class ResonanceState:
    energy: complex
    vector: np.ndarray  # grid field: phi(x) or Psi(x1, x2), sum(v**2) h**dims = 1
    theta: float
    particle_count: int
    grid: Grid
    residual: float = 0.0

    @property
    def position(self) -> float:
        return float(self.energy.real)

    @property
    def width(self) -> float:
        return float(-2.0 * self.energy.imag)

    @property
    def lifetime(self) -> float:
        if self.is_bound():
            return math.inf
        return 1.0 / self.width

    def is_bound(self, bound_tol: float = BOUND_TOL) -> bool:
        return abs(self.energy.imag) < bound_tol

    def c_norm(self) -> complex:
        return complex(np.sum(self.vector**2) * self.grid.h**self.particle_count)


def make_state(H: ScaledHamiltonian, pair: EigenPair) -> ResonanceState:
    return ResonanceState(
        complex(pair.value), H.to_field(pair.vector), H.system.theta, H.particle_count, H.grid, pair.residual
    )


def build_hamiltonian(system: ModelSystem, particle_count: int, **kw) -> ScaledHamiltonian:
    if particle_count == 1:
        return build_hamiltonian_1e(system)
    if particle_count == 2:
        return build_hamiltonian_2e(system, **kw)
    raise ValueError(f"particle_count must be 1 or 2, got {particle_count}")


@dataclass
class ThetaTrajectory:
    thetas: np.ndarray
    energies: np.ndarray
    optimal_theta: float
    stationarity: float
    states: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.thetas = np.asarray(self.thetas, dtype=float)
        self.energies = np.asarray(self.energies, dtype=complex)
        if len(self.thetas) != len(self.energies):
            raise ValueError("thetas and energies differ in length")
        if np.any(np.diff(self.thetas) <= 0):
            raise ValueError("thetas must be strictly increasing")

    @property
    def derivative(self) -> np.ndarray:
        return np.gradient(self.energies, self.thetas)

    def energy_at(self, theta: float) -> complex:
        k = int(np.argmin(np.abs(self.thetas - theta)))
        return complex(self.energies[k])


def theta_trajectory(
    system: ModelSystem,
    thetas,
    target: complex,
    particle_count: int = 1,
    *,
    how_many: int = 4,
    overlap_threshold: float = 0.5,
    tol: float = 1e-10,
    seed: int = 0,
) -> ThetaTrajectory:
    """Follow one eigenvalue across ``thetas`` by maximal |c-overlap|.

    The first point takes the eigenvalue nearest ``target``; later points
    search around the previous eigenvalue and keep the eigenvector overlapping
    most with the previous one.
    """
    thetas = np.asarray(thetas, dtype=float)
    if len(thetas) < 3:
        raise ValueError("a trajectory needs at least 3 angles")
    energies, states = [], []
    prev_vec, guess = None, complex(target)
    for k, th in enumerate(thetas):
        H = build_hamiltonian(system.with_theta(th), particle_count)
        pairs = solve_eigen(H, min(how_many, H.dimension), guess, tol=tol, seed=seed)
        if prev_vec is None:
            pick = pairs[0]
        else:
            ov = [abs(p.vector @ prev_vec) for p in pairs]
            best = int(np.argmax(ov))
            if ov[best] < overlap_threshold:
                raise TrajectoryJumpError(
                    f"trajectory jump between theta={thetas[k - 1]:.4f} and {th:.4f}: best overlap {ov[best]:.3f}"
                )
            pick = pairs[best]
        energies.append(pick.value)
        states.append(make_state(H, pick))
        prev_vec, guess = pick.vector, pick.value
    energies = np.array(energies)
    dE = np.abs(np.gradient(energies, thetas))
    k = int(np.argmin(dE))
    return ThetaTrajectory(thetas, energies, float(thetas[k]), float(dE[k]), states)


def continuum_thresholds(H: ScaledHamiltonian) -> list[complex]:
    """Thresholds from which rotated continua emanate."""
    left, right = H.system.asymptotes()
    if H.particle_count == 1:
        return [complex(left), complex(right)]
    one = build_hamiltonian_1e(H.system)
    pairs = solve_eigen(one, 1, None)
    e1 = pairs[0].value
    return [e1 + left, e1 + right, complex(2 * min(left, right))]


def is_continuum(E: complex, theta: float, thresholds, margin_fraction: float = 0.5, bound_tol=BOUND_TOL) -> bool:
    """True if E lies in the wedge swept by a rotated continuum.

    A discretized continuum leaving threshold t sits near arg(E - t) = -2 theta;
    E counts as continuum when arg(E - t) < -2 theta (1 - margin_fraction)
    for some threshold below Re(E).
    """
    if abs(E.imag) < bound_tol or theta == 0:
        return False
    for t in thresholds:
        d = E - t
        if d.real > 0 and np.angle(d) < -2 * theta * (1 - margin_fraction):
            return True
    return False


def identify_ler(
    H: ScaledHamiltonian,
    spectrum: list[EigenPair],
    trajectory: ThetaTrajectory | None = None,
    *,
    thresholds=None,
    bound_tol: float = BOUND_TOL,
    margin_fraction: float = 0.5,
    stationarity_tol: float = 0.05,
) -> ResonanceState:
    """Lowest-Re eigenpair that is bound or a genuine (non-continuum) resonance."""
    if not spectrum:
        raise ValueError("empty spectrum")
    theta = H.system.theta
    if trajectory is not None:
        ok_traj = trajectory.stationarity < stationarity_tol
        ref = trajectory.energy_at(theta)

        def qualifies(p):
            if abs(p.value.imag) < bound_tol:
                return True
            return ok_traj and abs(p.value - ref) < 1e-6 * max(1.0, abs(ref))
    else:
        if thresholds is None:
            thresholds = continuum_thresholds(H)

        def qualifies(p):
            return not is_continuum(p.value, theta, thresholds, margin_fraction, bound_tol)

    cands = sorted((p for p in spectrum if qualifies(p)), key=lambda p: p.value.real)
    if not cands:
        lowest = sorted((p.value for p in spectrum), key=lambda z: z.real)[:3]
        raise NoResonanceError("no resonance found", lowest)
    return make_state(H, cands[0])


def solve_ler(system: ModelSystem, particle_count: int, *, how_many: int = 12, target=None, tol=1e-10, seed=0,
              dense_max: int = DENSE_MAX, mem_cap: float = DEFAULT_MEM_CAP):
    """Assemble, diagonalize and pick the LER in one call; returns (state, spectrum)."""
    kw = {"mem_cap": mem_cap} if particle_count == 2 else {}
    H = build_hamiltonian(system, particle_count, **kw)
    if target is None and particle_count == 2 and H.dimension > dense_max:
        one = solve_eigen(build_hamiltonian_1e(system), 1, None)[0].value
        target = complex(2 * one.real)
    k = min(how_many, H.dimension)
    pairs = solve_eigen(H, k, target, tol=tol, seed=seed, dense_max=dense_max)
    return identify_ler(H, pairs), pairs
