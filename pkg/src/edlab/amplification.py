"""Direct position detection with a classical amplifier.

The amplifier is a column-stochastic likelihood ``L[a, x] = P(a|x)`` from a
microscopic position ``x`` to a macroscopic record cell ``a``; inference of
``x`` from an observed record is plain Bayes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import rng as _rng
from .lattice import Lattice, Wavefunction, born_position

STOCHASTIC_TOL = 1e-10
LOST_MASS_TOL = 1e-6


class TruncatedRecordWarning(UserWarning):
    """Some likelihood columns lost mass off the edges of the record grid."""


@dataclass(frozen=True, eq=False)
class Amplifier:
    lattice: Lattice
    record_grid: Lattice
    likelihood: np.ndarray

    def __post_init__(self):
        lik = np.array(self.likelihood, dtype=float)
        shape = (self.record_grid.n_sites, self.lattice.n_sites)
        if lik.shape != shape:
            raise ValueError(f"likelihood must have shape {shape}, got {lik.shape}")
        if np.any(lik < 0):
            raise ValueError("likelihood entries must be non-negative")
        if np.max(np.abs(lik.sum(axis=0) - 1.0)) > STOCHASTIC_TOL:
            raise ValueError("likelihood columns must each sum to 1")
        lik.setflags(write=False)
        object.__setattr__(self, "likelihood", lik)

    def record_distribution(self, prior) -> np.ndarray:
        """Forward marginal ``P(a) = sum_x P(a|x) P(x)``."""
        return self.likelihood @ np.asarray(prior, dtype=float)


def gaussian_amplifier(lattice: Lattice, record_grid: Lattice, sigma_a: float) -> Amplifier:
    """``P(a|x)`` proportional to ``exp(-(a - x)^2 / 2 sigma_a^2)``, normalized over ``a``.

    Columns that lose more than 1e-6 of their mass off the record grid are
    reported with a ``TruncatedRecordWarning``.
    """
    if not sigma_a > 0:
        raise ValueError("sigma_a must be positive")
    a = record_grid.coords[:, None]
    x = lattice.coords[None, :]
    z = (a - x) / sigma_a
    # exponent shifted per column so very narrow kernels do not underflow to 0/0
    logw = -0.5 * z**2
    w = np.exp(logw - logw.max(axis=0, keepdims=True))
    lik = w / w.sum(axis=0, keepdims=True)
    lo, hi = record_grid.extent
    half = 0.5 * record_grid.spacing
    inside = ndtr((hi + half - lattice.coords) / sigma_a) - ndtr((lo - half - lattice.coords) / sigma_a)
    if np.any(1.0 - inside > LOST_MASS_TOL):
        warnings.warn(
            f"record grid truncates up to {np.max(1.0 - inside):.2e} of the likelihood mass",
            TruncatedRecordWarning,
            stacklevel=2,
        )
    return Amplifier(lattice, record_grid, lik)


def matrix_amplifier(lattice: Lattice, record_grid: Lattice, rows) -> Amplifier:
    """Amplifier from an explicit ``rows[a][x]`` likelihood table."""
    return Amplifier(lattice, record_grid, np.asarray(rows, dtype=float))


def simulate_record(amp: Amplifier, psi: Wavefunction, seed: int) -> tuple[int, int]:
    """Draw ``x_true`` from ``|psi|^2`` then ``a_obs`` from ``P(a|x_true)``."""
    g = _rng.generator(seed)
    x = int(_rng.categorical(g, born_position(psi), 1)[0])
    a = int(_rng.categorical(g, amp.likelihood[:, x], 1)[0])
    return x, a


def simulate_records(amp: Amplifier, psi: Wavefunction, n: int, seed: int, jobs: int = 1):
    """``n`` independent ``(x_true, a_obs)`` pairs as two index arrays."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rho = born_position(psi)
    cdfs = np.cumsum(amp.likelihood, axis=0)
    cdfs /= cdfs[-1]

    def shard(g, size):
        xs = _rng.categorical(g, rho, size)
        u = g.random(size)
        a = np.sum(cdfs[:, xs] <= u, axis=0)
        return xs, np.minimum(a, amp.record_grid.n_sites - 1)

    parts = _rng.map_shards(shard, n, seed, jobs)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def infer_position(amp: Amplifier, prior, a_obs: int) -> np.ndarray:
    """Posterior ``P(x|a) = P(x) P(a|x) / P(a)``."""
    prior = np.asarray(prior, dtype=float)
    if prior.shape != (amp.lattice.n_sites,):
        raise ValueError("prior must have one entry per lattice site")
    joint = prior * amp.likelihood[a_obs]
    evidence = joint.sum()
    if not evidence > 0:
        raise ValueError(f"record {a_obs} has zero evidence under this prior")
    return joint / evidence


def credible_set(posterior, level: float = 0.9) -> np.ndarray:
    """Boolean mask of the smallest set of sites holding at least ``level`` mass."""
    posterior = np.asarray(posterior, dtype=float)
    order = np.argsort(-posterior, kind="stable")
    cum = np.cumsum(posterior[order])
    n_take = int(np.searchsorted(cum, level - 1e-12) + 1)
    mask = np.zeros(posterior.size, dtype=bool)
    mask[order[:n_take]] = True
    return mask
