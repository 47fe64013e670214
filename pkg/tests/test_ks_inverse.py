import numpy as np
import pytest
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment
from hypothesis import given, settings, strategies as st

from fracdfrt.densities import ComplexDensity
from fracdfrt.eigensolve import solve_ler
from fracdfrt.grid_model import Grid, ModelSystem, PotentialParams, build_laplacian
from fracdfrt.ks_inverse import (
    BranchError,
    MultiChannelError,
    TailFitError,
    block_spectrum,
    energy_components,
    extend_potential,
    hartree_potential,
    homo_energy,
    homo_for_ensemble,
    invert_ks,
    kinetic_term,
    ks_operator,
    solve_ks_forward,
    sqrt_density,
    tail_wavenumber,
    threshold_energy,
    xc_potential,
    xi_functional,
)

FREE = PotentialParams(0.0, 0.0, 1.0, 0.0, 0.0)


def normalized(grid, values, N=1.0):
    values = np.asarray(values, dtype=complex)
    return ComplexDensity(grid, N * values / (np.sum(values) * grid.h), N)


def test_sqrt_tracks_winding_phase():
    x = np.linspace(-4, 4, 401)
    n = np.exp(-(x**2)) * np.exp(3j * x)
    s = sqrt_density(n)
    assert np.allclose(s**2, n, atol=1e-14)
    # continuous branch: neighbouring roots never flip sign
    assert np.all(np.real(s[1:] * np.conj(s[:-1])) > 0)
    principal = np.sqrt(n)
    assert np.any(np.real(principal[1:] * np.conj(principal[:-1])) < 0)


def test_sqrt_rejects_phase_jump():
    n = np.ones(20, dtype=complex)
    n[12:] = -1.0
    with pytest.raises(BranchError, match="grid points 11 and 12"):
        sqrt_density(n)


def test_inversion_needs_density():
    g = Grid(-1.0, 1.0, 21)
    with pytest.raises(ValueError, match="floor"):
        invert_ks(ComplexDensity(g, np.zeros(21), 0.0), 0.0, -1.0)


def test_box_density_gives_flat_kinetic_term():
    g = Grid(0.0, 1.0, 401)
    L = 1.0 + 2 * g.h
    n = normalized(g, np.sin(np.pi * (g.x + g.h) / L) ** 2)
    kin, mask = kinetic_term(n, 0.0)
    interior = slice(20, -20)
    assert np.allclose(kin[interior], -np.pi**2 / (2 * L**2), rtol=1e-6)


def test_laplacian_matches_spectral_oracle():
    g = Grid(-9.0, 9.0, 901)
    x = g.x
    n = normalized(g, np.exp(-(x**2)))
    s = np.exp(-(x**2) / 2)
    # periodic FFT second derivative as the spectral reference
    k = 2 * np.pi * np.fft.fftfreq(len(x), d=g.h)
    d2 = np.real(np.fft.ifft(-(k**2) * np.fft.fft(s)))
    kin, mask = kinetic_term(n, 0.0)
    sel = np.abs(x) <= 5
    assert np.allclose(kin[sel], 0.5 * d2[sel] / s[sel], atol=1e-6)
    assert np.allclose(kin[sel], 0.5 * (x[sel] ** 2 - 1), atol=1e-6)


def test_hartree_limits():
    g = Grid(-10.0, 10.0, 2001)
    n = normalized(g, np.exp(-(g.x**2) / 1e-3))
    assert np.all(hartree_potential(n, 0.0, 0.3) == 0)
    vh = hartree_potential(n, 1.0, 0.0)
    assert np.allclose(vh, 1 / np.sqrt(1 + g.x**2), atol=1e-3)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.0, 0.7))
def test_hartree_symmetric_for_symmetric_density(width, theta):
    g = Grid(-6.0, 6.0, 121)
    n = normalized(g, np.exp(-(g.x**2) / width))
    vh = hartree_potential(n, 1.0, theta)
    assert np.allclose(vh, vh[::-1], atol=1e-12)


@pytest.mark.parametrize("name", ["states_a", "states_b"])
def test_one_electron_self_interaction_cancels(name, request):
    S = request.getfixturevalue(name)
    dec = S.decomposition(1.0)
    m = dec.valid_mask
    assert np.max(np.abs(dec.v_xc[m] + dec.v_hartree[m])) < 1e-6
    dec.check()


def test_masked_points_reported_and_extended(states_a):
    dec = states_a.decomposition(1.0)
    assert (~dec.valid_mask).any()
    assert np.all(np.isnan(dec.v_xc[~dec.valid_mask]))
    full = extend_potential(dec, dec.v_ext_scaled)
    assert np.all(np.isfinite(full))
    assert np.array_equal(full[dec.valid_mask], dec.v_s[dec.valid_mask])


def test_energy_components_noninteracting():
    sys = ModelSystem(Grid(-6.0, 6.0, 121), PotentialParams(0.0, 9.0, 0.5, 0.0, 0.0), 0.0, 0.0)
    st1, _ = solve_ler(sys, 1)
    n = ComplexDensity(sys.grid, st1.vector**2, 1.0)
    c = energy_components(n, sys, st1.energy)
    assert c.E_H == 0 and abs(c.E_xc) < 1e-10
    assert c.T_s + c.E_ext == pytest.approx(st1.energy, abs=1e-10)


def test_energy_components_close(states_a, system_a):
    E2 = states_a.energies[2]
    c = energy_components(states_a.density(2.0), system_a, E2)
    assert c.T_s + c.E_ext + c.E_H + c.E_xc == pytest.approx(E2, abs=1e-12)
    assert E2 == pytest.approx(-11.84, abs=0.01)
    assert c.E_H.real > 0


def test_homo_cases():
    assert homo_energy("bound", I=0.86) == -0.86
    assert abs(homo_energy("bound", I=1e-12)) < 1e-11
    # reference metastable values: A = -0.23, width 0.132, eps_th from the HOMO
    eps_th = (-0.17 - 0.15j) - (0.23 - 0.066j)
    assert homo_energy("metastable", A=-0.23, width=0.132, eps_th=eps_th) == pytest.approx(-0.17 - 0.15j)
    with pytest.raises(MultiChannelError, match="partial widths / branching ratios"):
        homo_energy("multi-channel")


def test_homo_for_ensemble_koopmans(states_a):
    # N -> 2 from below for a bound pair: -I_2 = E_2 - E_1
    eps = homo_for_ensemble(1.999, states_a.energies)
    assert eps == pytest.approx(states_a.energies[2] - states_a.energies[1])
    assert eps.real == pytest.approx(-5.46, abs=0.01)
    assert homo_for_ensemble(0.5, states_a.energies) == states_a.energies[1]


def test_threshold_energy():
    assert threshold_energy(-0.86, 0.0) == -0.86
    assert threshold_energy(-0.86 + 0j, -0.1 + 0.2j) == pytest.approx(-0.76 - 0.2j)


def test_xi_noninteracting_pair():
    sys = ModelSystem(Grid(-6.0, 6.0, 61), PotentialParams(0.0, 9.0, 0.5, 0.0, 0.0), 0.0, 0.0)
    st1, _ = solve_ler(sys, 1)
    st2, _ = solve_ler(sys, 2)
    n = ComplexDensity(sys.grid, 2 * np.sum(st2.vector**2, axis=1) * sys.grid.h, 2.0)
    eps = st2.energy - st1.energy
    dec = xc_potential(n, sys, eps)
    c = energy_components(n, sys, st2.energy)
    v_hxc = dec.v_s - dec.v_ext_scaled
    xi = xi_functional([eps], c.E_hxc, v_hxc, n, dec.valid_mask)
    assert abs(c.E_hxc) < 1e-9
    assert xi == pytest.approx(eps, abs=1e-8)


@pytest.mark.parametrize("name", ["states_a", "states_b"])
def test_eigenvalue_sum_identity(name, request):
    # E_2 = eps_H + eps_1 + E_Hxc - int v_Hxc n with both orbital energies from the forward solve
    S = request.getfixturevalue(name)
    sys = S.system
    n = S.density(2.0)
    dec = S.decomposition(2.0)
    full = extend_potential(dec, dec.v_ext_scaled)
    orb = solve_ks_forward(full, sys.grid, sys.theta, how_many=1, target=dec.epsilon_homo)[0]
    c = energy_components(n, sys, S.energies[2])
    v_hxc = full - dec.v_ext_scaled
    xi = xi_functional([orb.energy], c.E_hxc, v_hxc, n, np.ones(n.values.shape, bool))
    assert abs(threshold_energy(S.energies[2], xi) - orb.energy) < 1e-6


def test_forward_solve_hermitian_limit():
    g = Grid(-5.0, 5.0, 101)
    v = -3 * np.exp(-(g.x**2)) + 0j
    orbs = solve_ks_forward(v, g, 0.0, how_many=4)
    ref = sla.eigvalsh((-0.5 * build_laplacian(g)).toarray() + np.diag(v.real))[:4]
    assert np.allclose([o.energy for o in orbs], ref, atol=1e-10)
    assert all(abs(o.energy.imag) < 1e-12 for o in orbs)


def test_forward_solve_needs_finite_potential():
    g = Grid(-1.0, 1.0, 11)
    with pytest.raises(ValueError, match="extend_potential"):
        solve_ks_forward(np.full(11, np.nan + 0j), g, 0.1)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.0, 0.7), st.floats(-0.5, 0.5))
def test_block_form_matches_complex_form(theta, gamma):
    g = Grid(-4.0, 4.0, 41)
    v = (-3 + 1j * gamma) * np.exp(-(g.x**2) * np.exp(2j * theta))
    direct = np.linalg.eigvals(ks_operator(v, g, theta).toarray())
    block = block_spectrum(v, g, theta)
    union = np.concatenate([direct, direct.conj()])
    cost = np.abs(union[:, None] - block[None, :])
    r, c = linear_sum_assignment(cost)
    assert cost[r, c].max() < 1e-8


def test_block_solver_orbitals(states_b):
    dec = states_b.decomposition(1.0)
    full = extend_potential(dec, dec.v_ext_scaled)
    sys = states_b.system
    a = solve_ks_forward(full, sys.grid, sys.theta, how_many=1, target=dec.epsilon_homo)[0]
    b = solve_ks_forward(full, sys.grid, sys.theta, how_many=1, target=dec.epsilon_homo, representation="block")[0]
    assert b.energy == pytest.approx(a.energy, abs=1e-8)
    assert np.allclose(a.orbital**2, b.orbital**2, atol=1e-8)
    assert a.tau == pytest.approx(-2 / a.energy.imag)


def test_tail_of_bound_state_unscaled():
    sys = ModelSystem(Grid(-12.0, 12.0, 241), PotentialParams(0.0, 9.0, 0.5, 0.0, 0.0), 1.0, 0.0)
    st1, _ = solve_ler(sys, 1)
    n = ComplexDensity(sys.grid, st1.vector**2, 1.0)
    k = tail_wavenumber(n, 0.0, (2.5, 3.5))
    kappa = np.sqrt(-2 * st1.energy.real)
    assert abs(k.real) < 0.05 * kappa
    assert k.imag == pytest.approx(kappa, rel=0.05)


def test_tail_ks_consistency(states_a):
    # the KS orbital of the N=1 density decays with sqrt(2 (eps_H - eps_th)), eps_th = 0
    n = states_a.density(1.0)
    eps = states_a.homo(1.0)
    k = tail_wavenumber(n, states_a.system.theta, (2.5, 3.5), side="right")
    ref = np.sqrt(2 * eps)
    ref = ref if ref.imag > 0 else -ref
    assert abs(k - ref) < 0.05 * abs(ref)


def test_tail_fit_rejects_noise():
    g = Grid(0.0, 10.0, 101)
    rng = np.random.default_rng(1)
    vals = np.exp(-g.x) * (1 + 0.5 * rng.random(101))
    n = normalized(g, vals)
    with pytest.raises(TailFitError, match="larger box"):
        tail_wavenumber(n, 0.0, (3.0, 9.0), side="right")
