import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from edlab.detectors import (Detector, apply_unitary, bayes_collapse, born_rule, energy_detector,
                             expectation, from_hermitian, group_by_eigenvalue, momentum_detector,
                             position_detector, random_detector, sample_outcomes)
from edlab.dynamics import build_kernel, harmonic_potential
from edlab.lattice import Lattice, Wavefunction, born_position


def dense_probs(det, psi):
    return np.array([abs(np.vdot(det.basis[:, k], psi.amps)) ** 2 for k in range(det.basis.shape[1])])


def test_eigenstate_gives_delta(rng):
    lat = Lattice(6)
    det = random_detector(lat, rng)
    probs = born_rule(det, det.state(4)).probs
    np.testing.assert_allclose(probs, np.eye(6)[4], atol=1e-14)


def test_position_detector_is_born_position(rng):
    psi = Wavefunction.random(Lattice(9), rng)
    np.testing.assert_array_equal(born_rule(position_detector(psi.lattice), psi).probs, born_position(psi))


def test_matches_dense_oracle(rng):
    lat = Lattice(8)
    det, psi = random_detector(lat, rng), Wavefunction.random(lat, rng)
    np.testing.assert_allclose(born_rule(det, psi).probs, dense_probs(det, psi), rtol=0, atol=1e-14)


def test_apply_unitary_examples(rng):
    lat = Lattice(5)
    det = random_detector(lat, rng)
    np.testing.assert_allclose(apply_unitary(det, det.state(2)).amps, np.eye(5)[2], atol=1e-14)
    psi = Wavefunction.random(lat, rng)
    np.testing.assert_array_equal(apply_unitary(position_detector(lat), psi).amps, psi.amps)
    assert abs(apply_unitary(det, psi).norm() - psi.norm()) < 1e-13


def test_device_unitary_maps_basis_to_positions(rng):
    det = random_detector(Lattice(7), rng)
    np.testing.assert_allclose(det.unitary @ det.basis, np.eye(7), atol=1e-14)


def test_expectation_examples(rng):
    lat = Lattice(6)
    det = random_detector(lat, rng)
    assert expectation(det, det.state(3)) == pytest.approx(det.eigenvalues[3], abs=1e-13)
    psi = Wavefunction.random(lat, rng)
    assert expectation(det.relabel(np.ones(6)), psi) == pytest.approx(1.0, abs=1e-14)
    oracle = np.vdot(psi.amps, det.operator @ psi.amps)
    assert abs(oracle.imag) < 1e-13
    assert abs(expectation(det, psi) - oracle.real) < 1e-13


def test_lattice_mismatch_rejected(rng):
    det = random_detector(Lattice(4), rng)
    with pytest.raises(ValueError, match="different lattices"):
        born_rule(det, Wavefunction.random(Lattice(5), rng))


def test_detector_rejects_non_orthonormal_basis():
    with pytest.raises(ValueError, match="orthonormal"):
        Detector(Lattice(2), [[1, 1], [0, 1]], [0, 1])
    with pytest.raises(ValueError):
        Detector(Lattice(2), np.eye(2), [0, 1, 2])


def test_sampling_degenerate_distribution(rng):
    lat = Lattice(4)
    det = random_detector(lat, rng)
    counts = sample_outcomes(det, det.state(1), 500, seed=3)
    assert counts[1] == 500 and counts.sum() == 500


def test_sampling_binomial_bound():
    lat = Lattice(2)
    s = 1 / np.sqrt(2)
    counts = sample_outcomes(position_detector(lat), Wavefunction(lat, [s, s]), 100_000, seed=5)
    assert np.all(np.abs(counts - 50_000) <= 4 * np.sqrt(100_000 / 4))


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_sampling_consistency(seed):
    g = np.random.default_rng(seed)
    lat = Lattice(8)
    det, psi = random_detector(lat, g), Wavefunction.random(lat, g)
    n = 100_000
    p = born_rule(det, psi).probs
    counts = sample_outcomes(det, psi, n, seed)
    assert np.all(np.abs(counts - n * p) <= 3 * np.sqrt(n * p * (1 - p)) + 1e-9)


def test_sampling_is_deterministic_and_job_independent(rng):
    lat = Lattice(8)
    det, psi = random_detector(lat, rng), Wavefunction.random(lat, rng)
    a = sample_outcomes(det, psi, 50_000, seed=9)
    np.testing.assert_array_equal(a, sample_outcomes(det, psi, 50_000, seed=9))
    np.testing.assert_array_equal(a, sample_outcomes(det, psi, 50_000, seed=9, jobs=4))
    with pytest.raises(ValueError):
        sample_outcomes(det, psi, 0, seed=9)


def test_collapse_examples(rng):
    lat = Lattice(5)
    psi = Wavefunction.random(lat, rng)
    np.testing.assert_array_equal(bayes_collapse(position_detector(lat), psi, 3).amps, np.eye(5)[3])
    det = random_detector(lat, rng)
    np.testing.assert_array_equal(bayes_collapse(det, det.state(2), 2).amps, det.basis[:, 2])
    for k in range(5):
        after = bayes_collapse(det, psi, k)
        np.testing.assert_allclose(born_rule(det, after).probs, np.eye(5)[k], atol=1e-14)


def test_collapse_rejects_null_outcome():
    lat = Lattice(3)
    with pytest.raises(ValueError, match="zero probability"):
        bayes_collapse(position_detector(lat), Wavefunction.basis(lat, 0), 1)


def test_momentum_detector_plane_wave():
    lat = Lattice(16, 0.5)
    det = momentum_detector(lat)
    assert np.all(np.diff(det.eigenvalues) > 0)
    k = 11
    psi = Wavefunction.from_amplitudes(lat, np.exp(1j * det.eigenvalues[k] * lat.coords))
    np.testing.assert_allclose(born_rule(det, psi).probs, np.eye(16)[k], atol=1e-14)


def test_from_hermitian_reconstructs_operator(rng):
    lat = Lattice(6)
    a = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    m = a + a.conj().T
    det = from_hermitian(lat, m)
    assert np.all(np.diff(det.eigenvalues) >= 0)
    np.testing.assert_allclose(det.operator, m, atol=1e-12)
    for k in range(6):
        col = det.basis[:, k]
        lead = col[np.flatnonzero(np.abs(col) > 1e-12)[0]]
        assert abs(lead.imag) < 1e-15 and lead.real > 0


def test_energy_detector_diagonalizes_kernel():
    lat = Lattice.centered(10, 0.5)
    k = build_kernel(lat, 1.0, harmonic_potential(lat, 1.0))
    det = energy_detector(k)
    d = det.basis.conj().T @ k.matrix @ det.basis
    np.testing.assert_allclose(d, np.diag(det.eigenvalues), atol=1e-12)


def test_group_by_eigenvalue_merges_degenerate():
    values, probs = group_by_eigenvalue([2.0, 1.0, 1.0 + 1e-12, 3.0], [0.1, 0.2, 0.3, 0.4])
    np.testing.assert_allclose(values, [1.0, 2.0, 3.0])
    np.testing.assert_allclose(probs, [0.5, 0.1, 0.4])


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 16), st.integers(0, 2**32 - 1), st.floats(-np.pi, np.pi),
       st.floats(-5, 5), st.floats(-5, 5))
def test_detector_properties(n, seed, theta, scale, shift):
    g = np.random.default_rng(seed)
    lat = Lattice(n)
    det, psi = random_detector(lat, g), Wavefunction.random(lat, g)
    dist = born_rule(det, psi)
    np.testing.assert_allclose(dist.probs, born_position(apply_unitary(det, psi)), rtol=0, atol=1e-12)
    assert abs(dist.probs.sum() - 1) < 1e-12 and np.all(dist.probs >= 0)
    rotated = psi.with_amps(np.exp(1j * theta) * psi.amps)
    np.testing.assert_allclose(born_rule(det, rotated).probs, dist.probs, rtol=0, atol=1e-14)
    e = expectation(det, psi)
    relabeled = expectation(det.relabel(scale * det.eigenvalues + shift), psi)
    assert relabeled == pytest.approx(scale * e + shift, abs=1e-12)
