"""Tests for the Majorana covariance engine."""

import math

import numpy as np
import pytest

from weakisingsim.errors import InvalidArgumentError, NumericalFailureError
from weakisingsim.gaussian import (
    CovarianceState,
    SpinInterval,
    build_ground_state,
    connected_xx_correlator,
    dump_covariance,
    entanglement_entropy,
    ground_state_energy,
    half_chain_entropy,
    load_covariance,
    nn_zz_expectation,
    overlap_log,
    product_state_x,
    sigma_x_expectation,
    single_particle_energies,
    string_flip,
    zz_correlator_abs,
)


def test_ground_state_is_pure_and_antisymmetric():
    for length in (2, 7, 64):
        state = build_ground_state(length)
        checks = state.check()
        assert state.n_majorana == 2 * length
        assert checks["antisymmetry"] < 1e-12, f"L={length}: {checks}"
        assert checks["purity"] < 1e-10, f"L={length}: {checks}"
        assert checks["max_entry"] <= 1.0 + 1e-12, f"L={length}: {checks}"


def test_single_particle_energies():
    """Open chain of 2L Majoranas: eps_k = 4 cos(pi k / (2L+1)), k = 1..L."""
    length = 10
    expected = np.sort(4.0 * np.cos(np.pi * np.arange(1, length + 1) / (2 * length + 1)))
    energies = single_particle_energies(length)
    assert energies.shape == (length,)
    assert np.allclose(energies, expected, atol=1e-12), f"{energies} vs {expected}"


def test_two_site_ground_energy():
    """H = -s^z s^z - s^x_1 - s^x_2 has E0 = -sqrt(5)."""
    assert ground_state_energy(2) == pytest.approx(-math.sqrt(5.0), abs=1e-12)


def test_ground_energy_from_covariance():
    """<H> = -sum_k Gamma_{k,k+1} equals -(1/2) sum eps."""
    length = 16
    state = build_ground_state(length)
    energy = -sum(state.gamma[k, k + 1] for k in range(2 * length - 1))
    assert energy == pytest.approx(ground_state_energy(length), abs=1e-10)


def test_bulk_sigma_x_approaches_two_over_pi():
    state = build_ground_state(128)
    value = sigma_x_expectation(state, 64)
    assert value == pytest.approx(2.0 / math.pi, abs=1e-2), f"<s^x> in the bulk: {value}"


def test_product_state_has_no_entanglement():
    state = product_state_x(12, sign=-1)
    for ell in range(1, 12):
        s = entanglement_entropy(state, SpinInterval(1, ell))
        assert abs(s) < 1e-12, f"S({ell}) = {s} for a product state"
    assert sigma_x_expectation(state, 5) == -1.0
    assert abs(connected_xx_correlator(state, 2, 9)) < 1e-15


def test_entropy_is_symmetric_across_the_cut():
    """A pure state has S(A) = S(complement)."""
    length = 24
    state = build_ground_state(length)
    for ell in (1, 5, 11):
        left = entanglement_entropy(state, SpinInterval(1, ell))
        right = entanglement_entropy(state, SpinInterval(ell + 1, length))
        assert left == pytest.approx(right, abs=1e-9), f"cut {ell}: {left} vs {right}"
    whole = entanglement_entropy(state, SpinInterval(1, length))
    assert abs(whole) < 1e-9, f"Entropy of the whole chain: {whole}"


def test_half_chain_entropy_grows_logarithmically():
    s_small = half_chain_entropy(build_ground_state(32))
    s_large = half_chain_entropy(build_ground_state(128))
    # c/6 log 4 with c = 1/2
    assert s_large - s_small == pytest.approx(math.log(4.0) / 12.0, abs=0.015)


def test_overlap_of_state_with_itself():
    state = build_ground_state(20)
    assert overlap_log(state, state) == pytest.approx(0.0, abs=1e-10)


def test_overlap_of_orthogonal_product_states():
    plus = product_state_x(6, sign=1)
    minus = product_state_x(6, sign=-1)
    assert overlap_log(plus, minus) < -10.0


def test_nearest_neighbour_zz_matches_bilinear():
    """At distance 1 the Pfaffian overlap must reduce to |Gamma_{2j,2j+1}|."""
    state = build_ground_state(16)
    for j in (1, 8, 15):
        zz = zz_correlator_abs(state, j, j + 1)
        expected = abs(nn_zz_expectation(state, j))
        assert zz.value == pytest.approx(expected, abs=1e-10), f"j={j}: {zz} vs {expected}"
        assert not zz.underflow


def test_zz_correlator_decays_with_distance():
    state = build_ground_state(64)
    values = [zz_correlator_abs(state, 32 - r // 2, 32 - r // 2 + r).value for r in (2, 8, 16)]
    assert values[0] > values[1] > values[2] > 0.0, f"Not decaying: {values}"


def test_zz_vanishes_on_x_polarized_state():
    zz = zz_correlator_abs(product_state_x(8), 2, 6)
    assert zz.value < 1e-12, f"<s^z s^z> on an x product state: {zz}"


def test_zz_requires_ordered_sites():
    state = build_ground_state(8)
    with pytest.raises(InvalidArgumentError):
        zz_correlator_abs(state, 5, 5)
    with pytest.raises(InvalidArgumentError):
        zz_correlator_abs(state, 6, 3)
    with pytest.raises(InvalidArgumentError):
        zz_correlator_abs(state, 1, 9)


def test_string_flip_keeps_purity():
    flipped = string_flip(build_ground_state(10), 3, 7)
    assert flipped.purity_error() < 1e-10


def test_state_is_read_only():
    state = build_ground_state(4)
    with pytest.raises(ValueError):
        state.gamma[0, 1] = 0.0


def test_rejects_invalid_matrices_and_intervals():
    with pytest.raises(InvalidArgumentError):
        CovarianceState(np.zeros((3, 3)))
    with pytest.raises(InvalidArgumentError):
        CovarianceState(np.array([[0.0, 1.0], [-0.9, 0.0]]))
    with pytest.raises(InvalidArgumentError):
        SpinInterval(4, 2)
    with pytest.raises(InvalidArgumentError):
        entanglement_entropy(build_ground_state(4), SpinInterval(2, 5))
    with pytest.raises(InvalidArgumentError):
        build_ground_state(1)


def test_interval_complement():
    parts = SpinInterval(3, 5).complement(8)
    assert parts == [SpinInterval(1, 2), SpinInterval(6, 8)]
    assert SpinInterval(1, 8).complement(8) == []


def test_purity_violation_fails_loudly():
    drifted = CovarianceState(1.01 * build_ground_state(6).gamma)
    with pytest.raises(NumericalFailureError):
        drifted.require_pure("test")


def test_row_restricted_purity_matches_full_check():
    state = build_ground_state(10)
    rows = [4, 5]
    assert state.purity_error(rows) <= state.purity_error() + 1e-15


def test_covariance_dumps(tmp_path):
    state = build_ground_state(5)
    for name, fmt in (("gamma.bin", "bin"), ("gamma.csv", "csv")):
        path = dump_covariance(state, tmp_path / name, fmt)
        loaded = load_covariance(path)
        assert np.array_equal(loaded.gamma, state.gamma), f"{fmt} dump changed the matrix"
    with pytest.raises(InvalidArgumentError):
        dump_covariance(state, tmp_path / "gamma.txt", "txt")
