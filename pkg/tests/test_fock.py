import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qkdng.fock import (
    DensityMatrix,
    annihilation,
    choose_cutoff,
    coherent_ket,
    density_from_pure_ensemble,
    displaced_thermal_photon_probs,
    ensemble_cutoff,
    trace_distance,
)

mp.mp.dps = 40


def _mp_coherent(x, n_max):
    x = mp.mpc(x)
    return np.array([complex(mp.e ** (-abs(x) ** 2 / 2) * x**n / mp.sqrt(mp.factorial(n))) for n in range(n_max + 1)])


def _poisson_tail(lam, n):
    """P(N > n) for N ~ Poisson(lam)."""
    lam = mp.mpf(lam)
    return float(1 - sum(mp.e ** (-lam) * lam**k / mp.factorial(k) for k in range(n + 1)))


@pytest.mark.parametrize("x", [0, 0.3, 1 + 1j, -2.5j, 4 - 3j])
def test_coherent_ket_matches_high_precision_amplitudes(x):
    ket = coherent_ket(x, 80)
    np.testing.assert_allclose(ket.amplitudes, _mp_coherent(x, 80), rtol=1e-12, atol=1e-15)


def test_vacuum_ket_is_first_basis_vector():
    ket = coherent_ket(0, 5)
    np.testing.assert_array_equal(ket.amplitudes, [1, 0, 0, 0, 0, 0])
    assert ket.flags == ()


@pytest.mark.parametrize("x,n_max", [(1.0, 5), (2.0, 10), (3 + 1j, 30)])
def test_norm_deficit_equals_poisson_tail(x, n_max):
    ket = coherent_ket(x, n_max, tail_tol=np.inf)
    assert ket.norm_deficit == pytest.approx(_poisson_tail(abs(x) ** 2, n_max), abs=1e-13)


def test_small_cutoff_is_flagged():
    assert coherent_ket(3.0, 5).flags
    assert coherent_ket(3.0, 60).flags == ()


def test_large_amplitude_has_no_overflow():
    ket = coherent_ket(15.0, 500)
    assert np.all(np.isfinite(ket.amplitudes))
    assert ket.norm_deficit == pytest.approx(0.0, abs=1e-12)


def test_mean_photon_number_of_coherent_ket():
    ket = coherent_ket(1.5 - 0.5j, 60)
    a = annihilation(60)
    assert np.vdot(ket.amplitudes, a.conj().T @ a @ ket.amplitudes).real == pytest.approx(2.5, abs=1e-12)
    assert np.vdot(ket.amplitudes, a @ ket.amplitudes) == pytest.approx(1.5 - 0.5j, abs=1e-12)


def test_equal_mixture_of_plus_minus_coherent_states_is_even_odd_diagonal():
    kets = [coherent_ket(1.0, 40), coherent_ket(-1.0, 40)]
    rho = density_from_pure_ensemble(kets, [0.5, 0.5])
    assert rho.check() == []
    n = np.arange(41)
    odd = (n[:, None] + n[None, :]) % 2 == 1
    assert np.max(np.abs(rho.entries[odd])) < 1e-15
    assert rho.trace == pytest.approx(1.0, abs=1e-14)


def test_density_rejects_bad_inputs():
    k = coherent_ket(0.5, 10)
    with pytest.raises(ValueError):
        density_from_pure_ensemble([k, k], [0.7, 0.7])
    with pytest.raises(ValueError):
        density_from_pure_ensemble([k, coherent_ket(0.5, 11)], [0.5, 0.5])


def test_choose_cutoff_matches_poisson_oracle():
    # oracle: smallest n with P(N > n) <= 1e-12 for Poisson(4) is 25
    assert _poisson_tail(4, 24) > 1e-12 >= _poisson_tail(4, 25)
    assert choose_cutoff(2.0, 0.0, 1e-12) == 25


def test_choose_cutoff_for_vacuum_is_zero():
    assert choose_cutoff(0.0, 0.0) == 0


def test_choose_cutoff_covers_displaced_thermal_mass():
    n = choose_cutoff(1.5, 0.7, 1e-10)
    probs = displaced_thermal_photon_probs(1.5, 0.7, n)
    assert 1 - probs.sum() <= 1e-10
    assert 1 - probs[:-1].sum() > 1e-10


def test_displaced_thermal_probs_reduce_to_poisson_and_geometric():
    n = np.arange(30)
    poisson = np.array([float(mp.e ** (-2.25) * mp.mpf(2.25) ** k / mp.factorial(k)) for k in n])
    np.testing.assert_allclose(displaced_thermal_photon_probs(1.5, 0.0, 29), poisson, rtol=1e-12)
    geometric = 1.0**n / 2.0 ** (n + 1)
    np.testing.assert_allclose(displaced_thermal_photon_probs(0.0, 1.0, 29), geometric, rtol=1e-12)


def test_ensemble_cutoff_never_below_covering_the_bulk():
    amps = [0.1, 3.0]
    n = ensemble_cutoff(amps, [0.5, 0.5], 0.0, 1e-10)
    assert n >= choose_cutoff(0.1, 0.0, 5e-11)
    assert n <= choose_cutoff(3.0, 0.0, 1e-10)


def test_trace_distance_of_orthogonal_states_is_one():
    a = DensityMatrix(np.diag([1.0, 0.0]).astype(complex))
    b = DensityMatrix(np.diag([0.0, 1.0]).astype(complex))
    assert trace_distance(a, b) == pytest.approx(1.0)
    assert trace_distance(a, a) == 0.0


def test_trace_distance_of_pure_states_matches_overlap_formula():
    ka, kb = coherent_ket(0.0, 60), coherent_ket(1.0, 60)
    a = density_from_pure_ensemble([ka], [1.0])
    b = density_from_pure_ensemble([kb], [1.0])
    expected = np.sqrt(1 - np.exp(-1.0))
    assert trace_distance(a, b) == pytest.approx(expected, abs=1e-12)


def test_trace_distance_rejects_mismatched_cutoffs():
    with pytest.raises(ValueError):
        trace_distance(DensityMatrix(np.eye(2) / 2), DensityMatrix(np.eye(3) / 3))


def _state(amps, n_max=30):
    return density_from_pure_ensemble([coherent_ket(complex(*z), n_max, np.inf) for z in amps], [1 / len(amps)] * len(amps))


point = st.tuples(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5))


@settings(max_examples=40, deadline=None)
@given(st.lists(point, min_size=1, max_size=3), st.lists(point, min_size=1, max_size=3), st.lists(point, min_size=1, max_size=3))
def test_trace_distance_is_a_metric(x, y, z):
    a, b, c = _state(x), _state(y), _state(z)
    dab = trace_distance(a, b)
    assert 0.0 <= dab <= 1.0 + 1e-12
    assert dab == pytest.approx(trace_distance(b, a), abs=1e-12)
    assert trace_distance(a, c) <= dab + trace_distance(b, c) + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.complex_numbers(max_magnitude=5.0, allow_nan=False, allow_infinity=False))
def test_coherent_ket_at_chosen_cutoff_is_normalized(x):
    n_max = choose_cutoff(abs(x))
    ket = coherent_ket(x, n_max)
    assert 0.0 <= ket.norm_deficit <= 1e-10 + 1e-14
    assert ket.flags == ()
