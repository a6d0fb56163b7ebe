"""Lattice states: wave functions, (rho, phi) pairs and the map between them.

A state of a single particle on a finite 1D lattice can be written either as
a complex amplitude vector ``psi`` or as the canonical pair ``(rho, phi)``
with ``psi_k = sqrt(rho_k) * exp(1j * phi_k / hbar)``.  Both are stored as
immutable value objects.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

RHO_FLOOR = 1e-14
NORM_TOL = 1e-10
PAIR_NORM_TOL = 1e-9


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Lattice:
    """Uniform 1D lattice with ``n_sites`` points ``origin + j * spacing``."""

    n_sites: int
    spacing: float = 1.0
    origin: float = 0.0

    def __post_init__(self):
        if int(self.n_sites) != self.n_sites or self.n_sites < 2:
            raise ValueError(f"n_sites must be an integer >= 2, got {self.n_sites}")
        if not (np.isfinite(self.spacing) and self.spacing > 0):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if not np.isfinite(self.origin):
            raise ValueError("origin must be finite")
        object.__setattr__(self, "n_sites", int(self.n_sites))
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "origin", float(self.origin))

    @property
    def coords(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.n_sites)

    @property
    def extent(self) -> tuple[float, float]:
        return self.origin, self.origin + self.spacing * (self.n_sites - 1)

    def coord(self, j: int) -> float:
        return self.origin + j * self.spacing

    def nearest(self, x) -> np.ndarray | int:
        """Index of the site closest to ``x`` (clipped to the lattice)."""
        j = np.rint((np.asarray(x, dtype=float) - self.origin) / self.spacing)
        j = np.clip(j, 0, self.n_sites - 1).astype(int)
        return int(j) if j.ndim == 0 else j

    @classmethod
    def centered(cls, n_sites: int, spacing: float = 1.0, center: float = 0.0) -> "Lattice":
        return cls(n_sites, spacing, center - 0.5 * spacing * (n_sites - 1))

    def to_dict(self) -> dict:
        return {"n_sites": self.n_sites, "spacing": self.spacing, "origin": self.origin}


@dataclass(frozen=True)
class Wavefunction:
    """Normalized complex amplitudes over a lattice."""

    lattice: Lattice
    amps: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (self.lattice.n_sites,):
            raise ValueError(
                f"amplitude vector has shape {amps.shape}, lattice has {self.lattice.n_sites} sites"
            )
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm2 = float(np.vdot(amps, amps).real)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"wave function not normalized: sum |psi|^2 = {norm2!r}")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        object.__setattr__(self, "amps", _frozen(amps))
        object.__setattr__(self, "hbar", float(self.hbar))

    @classmethod
    def from_amplitudes(cls, lattice: Lattice, amps, hbar: float = 1.0) -> "Wavefunction":
        """Build a state from unnormalized amplitudes."""
        amps = np.asarray(amps, dtype=complex)
        norm = np.linalg.norm(amps)
        if norm == 0 or not np.isfinite(norm):
            raise ValueError("cannot normalize a zero or non-finite amplitude vector")
        return cls(lattice, amps / norm, hbar)

    @classmethod
    def basis(cls, lattice: Lattice, index: int, hbar: float = 1.0) -> "Wavefunction":
        amps = np.zeros(lattice.n_sites, dtype=complex)
        amps[index] = 1.0
        return cls(lattice, amps, hbar)

    @classmethod
    def gaussian(cls, lattice: Lattice, center: float, width: float, momentum: float = 0.0,
                 hbar: float = 1.0) -> "Wavefunction":
        """Gaussian packet with ``|psi|^2`` of standard deviation ``width``."""
        x = lattice.coords
        amps = np.exp(-((x - center) ** 2) / (4.0 * width**2) + 1j * momentum * x / hbar)
        return cls.from_amplitudes(lattice, amps, hbar)

    @classmethod
    def random(cls, lattice: Lattice, rng: np.random.Generator, hbar: float = 1.0) -> "Wavefunction":
        """Haar-random state (normalized complex Gaussian vector)."""
        n = lattice.n_sites
        return cls.from_amplitudes(lattice, rng.normal(size=n) + 1j * rng.normal(size=n), hbar)

    @property
    def n_sites(self) -> int:
        return self.lattice.n_sites

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def with_amps(self, amps) -> "Wavefunction":
        return Wavefunction(self.lattice, amps, self.hbar)

    def to_dict(self) -> dict:
        d = self.lattice.to_dict()
        d["hbar"] = self.hbar
        d["re"] = [float(v) for v in self.amps.real]
        d["im"] = [float(v) for v in self.amps.imag]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Wavefunction":
        lattice = Lattice(d["n_sites"], d.get("spacing", 1.0), d.get("origin", 0.0))
        amps = np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)
        return cls(lattice, amps, d.get("hbar", 1.0))

    @classmethod
    def from_json(cls, text: str) -> "Wavefunction":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class EpistemicPair:
    """Probability field ``rho`` and its conjugate phase field ``phi``.

    ``phi`` is in action units and is stored unwrapped along the lattice
    index, so finite differences of it approximate the phase gradient.
    """

    lattice: Lattice
    rho: np.ndarray
    phi: np.ndarray
    hbar: float = 1.0
    rho_floor: float = field(default=RHO_FLOOR)

    def __post_init__(self):
        n = self.lattice.n_sites
        rho = np.asarray(self.rho, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        if rho.shape != (n,) or phi.shape != (n,):
            raise ValueError("rho and phi must have one entry per lattice site")
        if np.any(rho < -1e-15) or not np.all(np.isfinite(rho)):
            raise ValueError("rho must be finite and non-negative")
        if not np.all(np.isfinite(phi[rho > self.rho_floor])):
            raise ValueError("phi must be finite where rho exceeds the floor")
        object.__setattr__(self, "rho", _frozen(np.clip(rho, 0.0, None)))
        object.__setattr__(self, "phi", _frozen(phi))
        object.__setattr__(self, "hbar", float(self.hbar))


def wrap_phase(d, period: float = 2 * np.pi) -> np.ndarray:
    """Map ``d`` into the half-open interval ``(-period/2, period/2]``."""
    half = 0.5 * period
    return half - np.mod(half - np.asarray(d, dtype=float), period)


def to_pair(psi: Wavefunction, rho_floor: float = RHO_FLOOR) -> EpistemicPair:
    """Split ``psi`` into ``(rho, phi)``.

    Phases are unwrapped along the lattice across sites where ``rho``
    exceeds ``rho_floor``; at sites below the floor the phase is linearly
    interpolated from the nearest resolved sites (0 if there are none).
    """
    rho = np.abs(psi.amps) ** 2
    phi = np.zeros(psi.n_sites)
    good = np.flatnonzero(rho > rho_floor)
    if good.size:
        raw = np.angle(psi.amps[good])
        steps = wrap_phase(np.diff(raw))
        unwrapped = raw[0] + np.concatenate(([0.0], np.cumsum(steps)))
        phi = np.interp(np.arange(psi.n_sites), good, unwrapped)
    return EpistemicPair(psi.lattice, rho, psi.hbar * phi, psi.hbar, rho_floor)


def to_psi(pair: EpistemicPair) -> Wavefunction:
    """Recombine ``(rho, phi)`` into the wave function ``sqrt(rho) exp(i phi / hbar)``."""
    total = float(np.sum(pair.rho))
    if abs(total - 1.0) > PAIR_NORM_TOL:
        raise ValueError(f"rho sums to {total!r}; state is corrupted")
    amps = np.sqrt(pair.rho) * np.exp(1j * pair.phi / pair.hbar)
    return Wavefunction.from_amplitudes(pair.lattice, amps, pair.hbar)


def born_position(psi: Wavefunction) -> np.ndarray:
    """Position-detection probabilities ``|<x_k|psi>|^2``."""
    p = np.abs(psi.amps) ** 2
    return p / p.sum()


def canonical_phase(amps) -> np.ndarray:
    """Rotate ``amps`` so its largest-modulus entry is real and positive."""
    amps = np.asarray(amps, dtype=complex)
    k = int(np.argmax(np.abs(amps)))
    if amps[k] == 0:
        return amps.copy()
    return amps * (abs(amps[k]) / amps[k])


def phase_aligned_error(a, b) -> float:
    """Max componentwise difference after removing the best global phase."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    overlap = np.vdot(a, b)
    rot = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(a * rot - b)))
