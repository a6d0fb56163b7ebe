"""Von Neumann indirect measurement with a Gaussian pointer.

The system couples to a pointer particle through the impulsive unitary
generated by ``P (x) M``: each detector component ``|s_k>`` translates the
pointer's ready packet by ``alpha_k``, so after the interaction

    |Psi> = sum_k c_k |s_k> (x) |pi shifted by alpha_k>,      c_k = <s_k|psi>.

Reading the pointer position ``X_f`` and applying Bayes' theorem gives the
posterior over eigenvalue indices.  Translations act in the pointer grid's
Fourier representation, so shifts by off-grid ``alpha_k`` stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import rng as _rng
from .detectors import Detector, amplitudes, group_by_eigenvalue
from .lattice import Lattice, Wavefunction

COVERAGE_SIGMAS = 6.0
STRONG_RATIO = 6.0


@dataclass(frozen=True)
class PointerDevice:
    grid: Lattice
    sigma_pi: float
    ready_center: float = 0.0

    def __post_init__(self):
        if not self.sigma_pi > 0:
            raise ValueError("sigma_pi must be positive")

    @classmethod
    def covering(cls, sigma_pi: float, eigenvalues, n_points: int = 256,
                 ready_center: float = 0.0, margin: float = 8.0) -> "PointerDevice":
        """Pointer whose grid covers every shifted packet with ``margin`` sigmas to spare."""
        alpha = np.asarray(eigenvalues, dtype=float)
        lo = ready_center + min(alpha.min(), 0.0) - margin * sigma_pi
        hi = ready_center + max(alpha.max(), 0.0) + margin * sigma_pi
        return cls(Lattice(n_points, (hi - lo) / (n_points - 1), lo), sigma_pi, ready_center)

    def ready_state(self) -> np.ndarray:
        """Grid amplitudes of ``exp(-(X - X_i)^2 / 4 sigma^2)``, unit norm."""
        x = self.grid.coords
        amps = np.exp(-((x - self.ready_center) ** 2) / (4.0 * self.sigma_pi**2))
        return amps / np.linalg.norm(amps)

    def required_bounds(self, eigenvalues) -> tuple[float, float]:
        alpha = np.asarray(eigenvalues, dtype=float)
        pad = COVERAGE_SIGMAS * self.sigma_pi
        return (self.ready_center + min(alpha.min(), 0.0) - pad,
                self.ready_center + max(alpha.max(), 0.0) + pad)

    def momenta(self) -> np.ndarray:
        """Grid wavenumbers, in ``numpy.fft`` order."""
        return 2 * np.pi * np.fft.fftfreq(self.grid.n_sites, d=self.grid.spacing)

    def translate(self, amps, shift: float) -> np.ndarray:
        """``exp(-i P shift / hbar)`` applied to grid amplitudes (moves them by ``+shift``)."""
        return np.fft.ifft(np.fft.fft(amps) * np.exp(-1j * self.momenta() * shift))


@dataclass(frozen=True, eq=False)
class JointState:
    """System-pointer state ``sum_k c_k |s_k> (x) |packet_k>``."""

    system_basis_coeffs: np.ndarray
    pointer_wavepackets: np.ndarray
    detector: Detector
    pointer: PointerDevice

    def __post_init__(self):
        c = np.asarray(self.system_basis_coeffs, dtype=complex)
        packets = np.asarray(self.pointer_wavepackets, dtype=complex)
        if packets.shape != (c.size, self.pointer.grid.n_sites):
            raise ValueError("need one pointer packet per detector outcome")
        norm2 = float(np.sum(np.abs(c[:, None] * packets) ** 2))
        if abs(norm2 - 1.0) > 1e-10:
            raise ValueError(f"joint state norm^2 is {norm2!r}")

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.detector.eigenvalues

    def weights(self) -> np.ndarray:
        return np.abs(self.system_basis_coeffs) ** 2

    def joint_distribution(self) -> np.ndarray:
        """``p(k, X_f) = |c_k|^2 |packet_k(X_f)|^2``, shape ``(n_outcomes, n_grid)``."""
        return self.weights()[:, None] * np.abs(self.pointer_wavepackets) ** 2

    def to_dense(self) -> np.ndarray:
        """Amplitudes ``Psi(x, X)`` over system sites times pointer grid."""
        return self.detector.basis @ (self.system_basis_coeffs[:, None] * self.pointer_wavepackets)

    def schmidt_coefficients(self) -> np.ndarray:
        return np.linalg.svd(self.to_dense(), compute_uv=False)


def couple(detector: Detector, psi: Wavefunction, pointer: PointerDevice) -> JointState:
    """Apply the impulsive coupling to ``psi`` (x) ready pointer.

    Rejects pointer grids that do not cover every ``alpha_k`` with
    ``COVERAGE_SIGMAS`` standard deviations to spare.
    """
    alpha = detector.eigenvalues
    lo, hi = pointer.required_bounds(alpha)
    g_lo, g_hi = pointer.grid.extent
    if lo < g_lo or hi > g_hi:
        raise ValueError(
            f"pointer grid [{g_lo:.6g}, {g_hi:.6g}] does not cover the shifted packets; "
            f"need at least [{lo:.6g}, {hi:.6g}]"
        )
    c = amplitudes(detector, psi)
    ready = pointer.ready_state()
    phases = np.exp(-1j * np.outer(alpha, pointer.momenta()))
    packets = np.fft.ifft(np.fft.fft(ready)[None, :] * phases, axis=1)
    return JointState(c, packets, detector, pointer)


def pointer_marginal(joint: JointState) -> np.ndarray:
    """``Pr(X_f) = sum_k |c_k|^2 |packet_k(X_f)|^2`` on the pointer grid."""
    return joint.joint_distribution().sum(axis=0)


def pointer_mean(joint: JointState) -> float:
    return float(np.dot(joint.pointer.grid.coords, pointer_marginal(joint)))


class Regime(NamedTuple):
    label: str
    ratio: float


def classify_regime(pointer: PointerDevice, eigenvalues, threshold: float = STRONG_RATIO) -> Regime:
    """Strong when the smallest gap between distinct eigenvalues is >= ``threshold`` sigma."""
    values, _ = group_by_eigenvalue(eigenvalues, np.zeros(len(eigenvalues)))
    if values.size < 2:
        return Regime("strong", float("inf"))
    ratio = float(np.min(np.diff(values)) / pointer.sigma_pi)
    return Regime("strong" if ratio >= threshold else "weak", ratio)


def sample_pointer(joint: JointState, n: int, seed: int, jobs: int = 1, return_k: bool = False):
    """``n`` pointer readings ``X_f`` drawn from the pointer marginal.

    Draws are ancestral: an outcome ``k`` with probability ``|c_k|^2``, then a
    grid cell from ``|packet_k|^2``.  With ``return_k`` the generating
    outcomes are returned too.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    w = joint.weights()
    dens = np.abs(joint.pointer_wavepackets) ** 2
    cdfs = np.cumsum(dens, axis=1)
    cdfs /= cdfs[:, -1:]
    coords = joint.pointer.grid.coords

    def shard(g, size):
        ks = _rng.categorical(g, w, size)
        u = g.random(size)
        idx = np.sum(cdfs[ks] <= u[:, None], axis=1)
        return ks, np.minimum(idx, coords.size - 1)

    parts = _rng.map_shards(shard, n, seed, jobs)
    ks = np.concatenate([p[0] for p in parts])
    xf = coords[np.concatenate([p[1] for p in parts])]
    return (xf, ks) if return_k else xf


def infer_eigenvalue(joint: JointState, eigenvalues, x_f: float) -> np.ndarray:
    """Posterior over outcome index ``k`` given the pointer reading ``x_f``."""
    alpha = np.asarray(eigenvalues, dtype=float)
    s = joint.pointer.sigma_pi
    log_like = -((x_f - joint.pointer.ready_center - alpha) ** 2) / (2.0 * s**2)
    w = joint.weights()
    support = w > 0
    if not np.any(support):
        raise ValueError("joint state has no outcome weight")
    log_like = np.where(support, log_like, -np.inf)
    top = np.max(log_like)
    if not np.any(w * np.exp(log_like) > 0):
        raise ValueError(f"pointer reading {x_f!r} has zero evidence")
    num = w * np.exp(log_like - top)
    return num / num.sum()


def eigenvalue_marginal(joint: JointState, eigenvalues=None, grouped: bool = False):
    """Outcome probabilities from summing ``p(k, X_f)`` over the pointer grid.

    Returns one entry per outcome index, or with ``grouped`` a
    ``(distinct alpha, probability)`` pair with degenerate outcomes merged.
    """
    probs = joint.joint_distribution().sum(axis=1)
    if grouped:
        alpha = joint.eigenvalues if eigenvalues is None else eigenvalues
        return group_by_eigenvalue(alpha, probs)
    return probs
