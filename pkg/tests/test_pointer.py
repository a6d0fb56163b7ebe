import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import erf

from edlab.detectors import born_rule, expectation, position_detector, random_detector
from edlab.lattice import Lattice, Wavefunction
from edlab.pointer import (JointState, PointerDevice, classify_regime, couple, eigenvalue_marginal,
                           infer_eigenvalue, pointer_marginal, pointer_mean, sample_pointer)
from oracles import dense_coupled_state, fidelity, posterior_by_summation


def two_outcome(alpha, c=(1 / np.sqrt(2), 1 / np.sqrt(2))):
    lat = Lattice(2)
    return position_detector(lat).relabel(alpha), Wavefunction(lat, np.asarray(c, dtype=complex))


def test_ready_state_is_normalized_gaussian():
    p = PointerDevice(Lattice(401, 0.01, -2.0), 0.2)
    r = p.ready_state()
    assert abs(np.linalg.norm(r) - 1) < 1e-14
    x = p.grid.coords
    var = np.sum(x**2 * r**2)
    assert var == pytest.approx(0.04, rel=1e-10)


def test_eigenstate_gives_single_bump(rng):
    lat = Lattice(4)
    det = random_detector(lat, rng, eigenvalues=[0.0, 0.5, 1.0, 1.5])
    ptr = PointerDevice.covering(0.05, det.eigenvalues, 512)
    joint = couple(det, det.state(2), ptr)
    marg = pointer_marginal(joint)
    x = ptr.grid.coords
    assert np.sum(marg * x) == pytest.approx(1.0, abs=1e-10)
    assert np.sum(marg[np.abs(x - 1.0) > 6 * 0.05]) < 1e-8
    np.testing.assert_allclose(eigenvalue_marginal(joint), [0, 0, 1, 0], atol=1e-14)


def test_zero_coupling_leaves_pointer_ready(rng):
    lat = Lattice(5)
    det = random_detector(lat, rng, eigenvalues=np.zeros(5))
    ptr = PointerDevice.covering(0.1, det.eigenvalues, 128)
    joint = couple(det, Wavefunction.random(lat, rng), ptr)
    np.testing.assert_allclose(pointer_marginal(joint), np.abs(ptr.ready_state()) ** 2, atol=1e-15)
    s = joint.schmidt_coefficients()
    assert s[1] < 1e-12


def test_two_bumps_of_half_mass():
    det, psi = two_outcome([-1.0, 1.0])
    ptr = PointerDevice.covering(0.1, det.eigenvalues, 1024)
    marg = pointer_marginal(couple(det, psi, ptr))
    x = ptr.grid.coords
    assert abs(marg.sum() - 1) < 1e-10
    # each bump owns its half-line; the overlap across the midpoint is ~1e-23
    assert abs(marg[x < 0].sum() - 0.5) < 1e-10
    assert abs(marg[x > 0].sum() - 0.5) < 1e-10
    # a +-0.5 window is only 5 sigma wide, so it misses the Gaussian tails
    for a in (-1.0, 1.0):
        window = marg[np.abs(x - a) <= 0.5].sum()
        assert abs(window - 0.5 * erf(5 / np.sqrt(2))) < 1e-8


def test_cross_terms_vanish(rng):
    lat = Lattice(4)
    det = random_detector(lat, rng, eigenvalues=[0.0, 0.2, 0.4, 1.0])
    ptr = PointerDevice.covering(0.3, det.eigenvalues, 256)
    joint = couple(det, Wavefunction.random(lat, rng), ptr)
    # summing |Psi(x, X)|^2 over system sites keeps no interference between packets
    dense_marginal = np.sum(np.abs(joint.to_dense()) ** 2, axis=0)
    np.testing.assert_allclose(dense_marginal, pointer_marginal(joint), rtol=0, atol=1e-15)


@pytest.mark.parametrize("sigma", [0.02, 1.5])
def test_pointer_mean_identity(rng, sigma):
    lat = Lattice(6)
    det = random_detector(lat, rng)
    psi = Wavefunction.random(lat, rng)
    ptr = PointerDevice.covering(sigma, det.eigenvalues, 2048, ready_center=0.7)
    joint = couple(det, psi, ptr)
    assert abs(pointer_mean(joint) - 0.7 - expectation(det, psi)) < 1e-8


@pytest.mark.parametrize("alpha, sigma, label, ratio", [
    ((0.0, 1.0), 0.05, "strong", 20.0),
    ((0.0, 1.0), 1.0, "weak", 1.0),
    ((0.0, 0.0), 0.3, "strong", np.inf),
])
def test_classify_regime(alpha, sigma, label, ratio):
    reg = classify_regime(PointerDevice(Lattice(8), sigma), alpha)
    assert reg.label == label and reg.ratio == pytest.approx(ratio)


def test_classify_regime_threshold_is_inclusive():
    assert classify_regime(PointerDevice(Lattice(8), 0.5), [0.0, 3.0]).label == "strong"
    assert classify_regime(PointerDevice(Lattice(8), 0.5), [0.0, 2.99]).label == "weak"


def test_coverage_rejected_with_bounds():
    det, psi = two_outcome([0.0, 5.0])
    ptr = PointerDevice(Lattice(64, 0.05, -1.0), 0.1)
    with pytest.raises(ValueError, match="need at least"):
        couple(det, psi, ptr)


def test_single_bump_sampling_stays_local(rng):
    det, _ = two_outcome([0.0, 2.0])
    ptr = PointerDevice.covering(0.1, det.eigenvalues, 512)
    xf = sample_pointer(couple(det, det.state(1), ptr), 20_000, seed=2)
    assert np.all(np.abs(xf - 2.0) <= 6 * 0.1)


def test_two_bump_occupancy_and_determinism():
    c = np.array([np.sqrt(0.3), np.sqrt(0.7) * 1j])
    det, psi = two_outcome([-1.0, 1.0], c)
    ptr = PointerDevice.covering(0.1, det.eigenvalues, 1024)
    joint = couple(det, psi, ptr)
    n = 100_000
    xf = sample_pointer(joint, n, seed=8)
    left = np.sum(xf < 0)
    assert abs(left - 0.3 * n) <= 3 * np.sqrt(n * 0.3 * 0.7)
    np.testing.assert_array_equal(xf, sample_pointer(joint, n, seed=8, jobs=3))


def test_infer_eigenvalue_strong_regime():
    det, psi = two_outcome([0.0, 1.0], [np.sqrt(0.9), np.sqrt(0.1)])
    ptr = PointerDevice.covering(1 / 6, det.eigenvalues, 512)
    joint = couple(det, psi, ptr)
    for j, a in enumerate(det.eigenvalues):
        assert infer_eigenvalue(joint, det.eigenvalues, a)[j] >= 0.99


def test_infer_eigenvalue_uninformative(rng):
    lat = Lattice(4)
    det = random_detector(lat, rng, eigenvalues=np.full(4, 0.5))
    psi = Wavefunction.random(lat, rng)
    joint = couple(det, psi, PointerDevice.covering(0.1, det.eigenvalues, 128))
    np.testing.assert_allclose(infer_eigenvalue(joint, det.eigenvalues, 0.3),
                               born_rule(det, psi).probs, atol=1e-15)


def test_infer_eigenvalue_brute_force(rng):
    for _ in range(20):
        lat = Lattice(5)
        det = random_detector(lat, rng)
        psi = Wavefunction.random(lat, rng)
        sigma = rng.uniform(0.2, 2.0)
        ptr = PointerDevice.covering(sigma, det.eigenvalues, 128, ready_center=0.4)
        joint = couple(det, psi, ptr)
        x_f = rng.uniform(-2, 2)
        oracle = posterior_by_summation(joint.weights(), det.eigenvalues, sigma, x_f, 0.4)
        np.testing.assert_allclose(infer_eigenvalue(joint, det.eigenvalues, x_f), oracle, rtol=0, atol=1e-14)


def test_infer_eigenvalue_zero_evidence():
    det, psi = two_outcome([0.0, 1.0])
    joint = couple(det, psi, PointerDevice.covering(0.01, det.eigenvalues, 256))
    with pytest.raises(ValueError, match="zero evidence"):
        infer_eigenvalue(joint, det.eigenvalues, 500.0)


def test_eigenvalue_marginal_matches_born_rule(rng):
    lat = Lattice(8)
    det = random_detector(lat, rng)
    psi = Wavefunction.random(lat, rng)
    born = born_rule(det, psi).probs
    for sigma in (0.01, 0.1, 1.0):
        joint = couple(det, psi, PointerDevice.covering(sigma, det.eigenvalues, 1024))
        np.testing.assert_allclose(eigenvalue_marginal(joint), born, rtol=0, atol=1e-10)


def test_degenerate_eigenvalue_marginal(rng):
    lat = Lattice(3)
    det = random_detector(lat, rng, eigenvalues=[1.0, 1.0, 2.0])
    psi = Wavefunction.random(lat, rng)
    joint = couple(det, psi, PointerDevice.covering(0.1, det.eigenvalues, 256))
    values, probs = eigenvalue_marginal(joint, grouped=True)
    c2 = born_rule(det, psi).probs
    np.testing.assert_allclose(values, [1.0, 2.0])
    assert abs(probs[0] - c2[0] - c2[1]) < 1e-12


def test_entangled_when_resolved(rng):
    det, psi = two_outcome([0.0, 1.0])
    joint = couple(det, psi, PointerDevice.covering(0.2, det.eigenvalues, 256))
    assert joint.schmidt_coefficients()[1] > 1e-6


def test_matches_dense_product_space_oracle(rng):
    lat = Lattice(4)
    det = random_detector(lat, rng, eigenvalues=rng.integers(0, 3, 4).astype(float))
    psi = Wavefunction.random(lat, rng)
    ptr = PointerDevice.covering(0.05, det.eigenvalues, 128)
    dense = dense_coupled_state(det, psi, ptr)
    assert fidelity(couple(det, psi, ptr).to_dense(), dense) > 1 - 1e-12


def test_joint_state_rejects_bad_norm(rng):
    det, psi = two_outcome([0.0, 1.0])
    ptr = PointerDevice.covering(0.1, det.eigenvalues, 64)
    with pytest.raises(ValueError, match="norm"):
        JointState(np.array([1.0, 1.0]), np.tile(ptr.ready_state(), (2, 1)), det, ptr)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 2.0), st.complex_numbers(max_magnitude=2),
       st.complex_numbers(max_magnitude=2))
def test_coupling_properties(seed, sigma, a, b):
    g = np.random.default_rng(seed)
    lat = Lattice(4)
    det = random_detector(lat, g)
    p1, p2 = Wavefunction.random(lat, g), Wavefunction.random(lat, g)
    ptr = PointerDevice.covering(sigma, det.eigenvalues, 256)
    j1, j2 = couple(det, p1, ptr), couple(det, p2, ptr)
    assert abs(np.sum(np.abs(j1.to_dense()) ** 2) - 1) < 1e-10
    mix = a * p1.amps + b * p2.amps
    nrm = np.linalg.norm(mix)
    if nrm > 1e-3:
        jm = couple(det, Wavefunction(lat, mix / nrm), ptr)
        np.testing.assert_allclose(jm.to_dense() * nrm, a * j1.to_dense() + b * j2.to_dense(), atol=1e-12)
    assert abs(pointer_mean(j1) - expectation(det, p1)) < 1e-8
