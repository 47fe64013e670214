import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracdfrt.densities import (
    ComplexDensity,
    EnsembleSpec,
    ensemble_density,
    ensemble_energy,
    ensemble_energy_at,
    en_curve,
    mix_densities,
)
from fracdfrt.grid_model import Grid

frac = st.floats(0.0, 1.0)


def test_density_normalization(small_states):
    for k, n in small_states.densities.items():
        assert n.integral() == pytest.approx(k, abs=1e-10)


def test_density_rejects_wrong_norm():
    g = Grid(-1.0, 1.0, 11)
    with pytest.raises(ValueError, match="integrates"):
        ComplexDensity(g, np.ones(11), 1.0)
    with pytest.raises(ValueError):
        ComplexDensity(g, np.ones(10), 1.0)


def test_two_electron_density_is_symmetric(small_states):
    n = small_states.densities[2].values
    assert np.allclose(n, n[::-1], atol=1e-10)


def test_integer_endpoints(small_states):
    d = small_states.densities
    assert np.array_equal(mix_densities(1.0, d).values, d[1].values)
    assert np.array_equal(mix_densities(2.0, d).values, d[2].values)
    assert np.all(mix_densities(0.0, d).values == 0)


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-6, 1.0), st.floats(1e-6, 1.0), frac, st.sampled_from([0, 1]))
def test_ensemble_affine_in_N(small_states, a, b, t, J):
    # N in (J, J+1]: the density is affine in N
    d = small_states.densities
    Na, Nb = J + a, J + b
    Nt = (1 - t) * Na + t * Nb
    rhs = (1 - t) * mix_densities(Na, d).values + t * mix_densities(Nb, d).values
    assert np.max(np.abs(mix_densities(Nt, d).values - rhs)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 2.0))
def test_ensemble_norm_equals_N(small_states, N):
    assert abs(mix_densities(N, small_states.densities).integral() - N) < 1e-8


def test_ensemble_spec_validation(small_states):
    s1, s2 = small_states.states[1], small_states.states[2]
    with pytest.raises(ValueError):
        EnsembleSpec(2.5, 1, s1, s2)
    with pytest.raises(ValueError):
        EnsembleSpec(1.5, 1, None, s2)
    spec = EnsembleSpec(1.25, 1, s1, s2)
    assert spec.weights == (0.75, 0.25)
    assert ensemble_energy(spec) == pytest.approx(0.75 * s1.energy + 0.25 * s2.energy)
    n = ensemble_density(spec)
    assert n.integral() == pytest.approx(1.25, abs=1e-10)
    vac = EnsembleSpec(0.5, 0, None, s1)
    assert ensemble_density(vac).values == pytest.approx(0.5 * small_states.densities[1].values)


def test_grid_mismatch_raises(small_states, states_a):
    spec = EnsembleSpec(1.5, 1, states_a.states[1], small_states.states[2])
    with pytest.raises(ValueError, match="grids"):
        ensemble_density(spec)


@settings(max_examples=40, deadline=None)
@given(st.complex_numbers(max_magnitude=20), st.complex_numbers(max_magnitude=20), frac)
def test_energy_piecewise_linear(E1, E2, t):
    E = {0: 0j, 1: E1, 2: E2}
    for J in (0, 1):
        mid = ensemble_energy_at(J + 0.5, E)
        assert abs(mid - 0.5 * (E[J] + E[J + 1])) < 1e-12
        assert abs(ensemble_energy_at(J + t, E) - ((1 - t) * E[J] + t * E[J + 1])) < 1e-12 * (1 + abs(E1) + abs(E2))


def test_en_curve_kinks_and_slopes():
    curve = en_curve({1: -0.86 + 0j, 2: -0.63 - 0.066j})
    assert 1.0 in curve.N_samples and 2.0 in curve.N_samples
    s = curve.slopes()
    assert s[(0, 1)] == pytest.approx(-0.86)
    assert s[(1, 2)] == pytest.approx(0.23 - 0.066j)
    assert s[(0, 1)].imag == 0 and s[(1, 2)].imag != 0


def test_en_curve_missing_state():
    with pytest.raises(KeyError, match=r"\[2\]"):
        en_curve({1: -1.0 + 0j})


@pytest.mark.parametrize("name", ["states_a", "states_b"])
def test_energy_curve_concave_upward(name, request):
    E = request.getfixturevalue(name).energies
    assert E[1].real < 0.5 * (0.0 + E[2].real)
