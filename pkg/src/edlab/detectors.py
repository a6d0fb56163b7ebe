"""Complex measurement devices.

A detector is an orthonormal basis ``{|s_k>}`` (columns of ``basis``) plus
eigenvalue labels ``alpha_k``.  Its device unitary maps ``|s_k>`` to the
position state ``|x_k>``, i.e. ``U_M = basis^dagger``, so every outcome is
ultimately a position detection after transit through the device.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .lattice import Lattice, Wavefunction, born_position

ORTHONORMAL_TOL = 1e-10
DEGENERACY_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class Detector:
    lattice: Lattice
    basis: np.ndarray
    eigenvalues: np.ndarray
    label: str = "detector"

    def __post_init__(self):
        n = self.lattice.n_sites
        b = np.array(self.basis, dtype=complex)
        if b.shape != (n, n):
            raise ValueError(f"detector basis is {b.shape}, lattice has {n} sites")
        if np.max(np.abs(b.conj().T @ b - np.eye(n))) > ORTHONORMAL_TOL:
            raise ValueError("detector basis is not orthonormal")
        alpha = np.array(self.eigenvalues, dtype=float)
        if alpha.shape != (n,):
            raise ValueError(f"need {n} eigenvalues, got {alpha.shape}")
        b.setflags(write=False)
        alpha.setflags(write=False)
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "eigenvalues", alpha)

    @property
    def unitary(self) -> np.ndarray:
        """Device unitary ``U_M`` with ``U_M |s_k> = |x_k>``."""
        return self.basis.conj().T

    @property
    def operator(self) -> np.ndarray:
        """The inferable ``M = sum_k alpha_k |s_k><s_k|``."""
        return (self.basis * self.eigenvalues) @ self.basis.conj().T

    def state(self, k: int, hbar: float = 1.0) -> Wavefunction:
        return Wavefunction(self.lattice, self.basis[:, k], hbar)

    def relabel(self, eigenvalues, label: str | None = None) -> "Detector":
        return Detector(self.lattice, self.basis, eigenvalues, label or self.label)


@dataclass(frozen=True)
class OutcomeDistribution:
    probs: np.ndarray
    eigenvalues: np.ndarray
    detector_label: str = ""

    def by_eigenvalue(self):
        return group_by_eigenvalue(self.eigenvalues, self.probs)


def position_detector(lattice: Lattice) -> Detector:
    return Detector(lattice, np.eye(lattice.n_sites), lattice.coords, "position")


def momentum_detector(lattice: Lattice, hbar: float = 1.0) -> Detector:
    """Discrete-Fourier basis, outcomes ordered by ascending momentum."""
    n = lattice.n_sites
    q = np.sort(2 * np.pi * np.fft.fftfreq(n, d=lattice.spacing))
    basis = np.exp(1j * np.outer(lattice.coords, q)) / np.sqrt(n)
    return Detector(lattice, basis, hbar * q, "momentum")


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    vecs = vecs.copy()
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * np.max(np.abs(col)))
        lead = col[nz[0]]
        vecs[:, k] = col * (abs(lead) / lead)
    return vecs


def from_hermitian(lattice: Lattice, matrix, label: str = "hermitian") -> Detector:
    """Detector whose inferable is the Hermitian ``matrix``.

    Eigenvalues ascend; each eigenvector's first non-negligible component is
    made real and positive.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (lattice.n_sites, lattice.n_sites):
        raise ValueError(f"operator is {m.shape}, lattice has {lattice.n_sites} sites")
    if np.max(np.abs(m - m.conj().T)) > 1e-12 * max(1.0, np.max(np.abs(m))):
        raise ValueError("operator is not Hermitian")
    w, v = np.linalg.eigh(m)
    return Detector(lattice, _fix_phases(v), w, label)


def energy_detector(kernel) -> Detector:
    return from_hermitian(kernel.lattice, kernel.matrix, "energy")


def random_detector(lattice: Lattice, rng: np.random.Generator, eigenvalues=None) -> Detector:
    """Haar-random basis (QR of a complex Gaussian matrix)."""
    n = lattice.n_sites
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    alpha = rng.normal(size=n) if eigenvalues is None else eigenvalues
    return Detector(lattice, q, alpha, "random")


def _check(detector: Detector, psi: Wavefunction):
    if detector.lattice != psi.lattice:
        raise ValueError("detector and state live on different lattices")


def amplitudes(detector: Detector, psi: Wavefunction) -> np.ndarray:
    """Coefficients ``c_k = <s_k|psi>``."""
    _check(detector, psi)
    return detector.basis.conj().T @ psi.amps


def apply_unitary(detector: Detector, psi: Wavefunction) -> Wavefunction:
    """State arriving at the position detectors, ``U_M |psi> = sum_k c_k |x_k>``."""
    return Wavefunction(psi.lattice, amplitudes(detector, psi), psi.hbar)


def born_rule(detector: Detector, psi: Wavefunction) -> OutcomeDistribution:
    """Outcome probabilities ``|<s_k|psi>|^2``, computed as position detection after ``U_M``."""
    probs = born_position(apply_unitary(detector, psi))
    return OutcomeDistribution(probs, detector.eigenvalues, detector.label)


def expectation(detector: Detector, psi: Wavefunction) -> float:
    return float(np.dot(detector.eigenvalues, born_rule(detector, psi).probs))


def group_by_eigenvalue(eigenvalues, probs, rtol: float = DEGENERACY_RTOL):
    """Sum probabilities over equal eigenvalues.

    Returns ``(values, probs)`` with distinct values in ascending order; two
    eigenvalues are equal when they differ by at most ``rtol * max|alpha|``.
    """
    alpha = np.asarray(eigenvalues, dtype=float)
    probs = np.asarray(probs, dtype=float)
    order = np.argsort(alpha, kind="stable")
    tol = rtol * max(np.max(np.abs(alpha)), 0.0) if alpha.size else 0.0
    values, sums = [], []
    for i in order:
        if values and abs(alpha[i] - values[-1]) <= tol:
            sums[-1] += probs[i]
        else:
            values.append(alpha[i])
            sums.append(probs[i])
    return np.array(values), np.array(sums)


def sample_outcomes(detector: Detector, psi: Wavefunction, n: int, seed: int, jobs: int = 1) -> np.ndarray:
    """Counts of ``n`` independent outcome draws, reproducible per seed."""
    if n < 1:
        raise ValueError("n must be at least 1")
    probs = born_rule(detector, psi).probs
    parts = _rng.map_shards(lambda g, size: g.multinomial(size, probs), n, seed, jobs)
    return np.sum(parts, axis=0)


def bayes_collapse(detector: Detector, psi: Wavefunction, outcome_k: int) -> Wavefunction:
    """Updated state ``|s_k>`` after detection at ``x_k`` (conditioning on the outcome)."""
    p = born_rule(detector, psi).probs[outcome_k]
    if p <= 0:
        raise ValueError(f"outcome {outcome_k} has zero probability; cannot condition on it")
    return detector.state(outcome_k, psi.hbar)
