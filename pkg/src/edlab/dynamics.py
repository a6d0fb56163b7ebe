"""Time evolution on the lattice.

Two equivalent routes are provided:

* ``evolve_schrodinger`` integrates ``i hbar dpsi/dt = H psi`` with the
  Cayley (implicit midpoint) step, which is exactly unitary.
* ``hamilton_flow`` integrates the canonical equations

  .. math::

      \\dot\\rho_k = \\partial \\tilde H / \\partial \\phi_k, \\qquad
      \\dot\\phi_k = -\\partial \\tilde H / \\partial \\rho_k,

  where :math:`\\tilde H(\\rho, \\phi) = \\psi^\\dagger H \\psi` with
  :math:`\\psi_k = \\sqrt{\\rho_k} e^{i\\phi_k/\\hbar}`.  The integrator is the
  generalized (non-separable) Stormer-Verlet leapfrog, which is symplectic
  and second order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .lattice import EpistemicPair, Lattice, Wavefunction, wrap_phase

HERMITIAN_TOL = 1e-12


class NodeCrossingError(RuntimeError):
    """Raised when the (rho, phi) chart hits a node of the wave function."""

    def __init__(self, step: int, site: int, rho: float):
        super().__init__(f"rho[{site}] = {rho:.3e} fell below the floor at step {step}")
        self.step = step
        self.site = site
        self.rho = rho


@dataclass(frozen=True, eq=False)
class HamiltonianKernel:
    lattice: Lattice
    mass: float
    potential: np.ndarray
    matrix: np.ndarray
    hbar: float = 1.0
    boundary: str = "hard_wall"

    def __post_init__(self):
        n = self.lattice.n_sites
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (n, n):
            raise ValueError(f"kernel matrix must be {n}x{n}")
        if np.max(np.abs(m - m.conj().T)) >= HERMITIAN_TOL * max(1.0, np.max(np.abs(m))):
            raise ValueError("kernel matrix is not Hermitian")
        m = m.copy()
        m.setflags(write=False)
        v = np.array(self.potential, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "potential", v)

    @classmethod
    def from_matrix(cls, lattice: Lattice, matrix, hbar: float = 1.0, mass: float = 1.0) -> "HamiltonianKernel":
        """Wrap an arbitrary Hermitian matrix (a nonlocal kernel)."""
        matrix = np.asarray(matrix, dtype=complex)
        return cls(lattice, mass, np.real(np.diag(matrix)), matrix, hbar, "general")

    def energy(self, amps) -> float:
        amps = np.asarray(amps, dtype=complex)
        return float(np.vdot(amps, self.matrix @ amps).real / np.vdot(amps, amps).real)


def laplacian(lattice: Lattice, boundary: str = "hard_wall") -> np.ndarray:
    """Three-point finite-difference Laplacian."""
    n, a = lattice.n_sites, lattice.spacing
    lap = (np.diag(np.full(n - 1, 1.0), 1) + np.diag(np.full(n - 1, 1.0), -1) - 2.0 * np.eye(n))
    if boundary == "periodic":
        if n == 2:
            # both neighbours of each site are the other site
            lap = np.array([[-2.0, 2.0], [2.0, -2.0]])
        else:
            lap[0, -1] = lap[-1, 0] = 1.0
    elif boundary != "hard_wall":
        raise ValueError(f"unknown boundary {boundary!r}")
    return lap / a**2


def build_kernel(lattice: Lattice, mass: float, potential, hbar: float = 1.0,
                 boundary: str = "hard_wall") -> HamiltonianKernel:
    """Single-particle kernel ``-hbar^2/2m * Laplacian + diag(V)``."""
    if not mass > 0:
        raise ValueError("mass must be positive")
    v = np.asarray(potential, dtype=float)
    if v.shape != (lattice.n_sites,):
        raise ValueError(f"potential needs {lattice.n_sites} samples, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("potential has non-finite entries")
    matrix = -(hbar**2) / (2.0 * mass) * laplacian(lattice, boundary) + np.diag(v)
    return HamiltonianKernel(lattice, float(mass), v, matrix.astype(complex), float(hbar), boundary)


@dataclass(frozen=True, eq=False)
class Propagator:
    """One Cayley step ``(I + iH dt/2hbar)^-1 (I - iH dt/2hbar)``."""

    kernel: HamiltonianKernel
    dt: float
    unitary_step: np.ndarray

    @classmethod
    def build(cls, kernel: HamiltonianKernel, dt: float) -> "Propagator":
        if not dt > 0:
            raise ValueError("dt must be positive")
        n = kernel.lattice.n_sites
        half = 0.5j * dt / kernel.hbar * kernel.matrix
        step = la.solve(np.eye(n) + half, np.eye(n) - half)
        return cls(kernel, float(dt), step)

    def apply(self, amps, n_steps: int, record_every: int | None = None):
        """Apply ``n_steps`` steps to a raw amplitude vector (no renormalization).

        With ``record_every`` the states at every multiple of it (including
        step 0 and the final step) are returned as ``(steps, states)``.
        """
        amps = np.asarray(amps, dtype=complex)
        if record_every is None:
            for _ in range(n_steps):
                amps = self.unitary_step @ amps
            return amps
        steps, states = [0], [amps.copy()]
        for i in range(1, n_steps + 1):
            amps = self.unitary_step @ amps
            if i % record_every == 0 or i == n_steps:
                steps.append(i)
                states.append(amps.copy())
        return np.array(steps), np.array(states)


def n_steps_for(t: float, dt: float) -> int:
    if not dt > 0:
        raise ValueError("dt must be positive")
    if t < 0:
        raise ValueError("t must be non-negative")
    n = int(round(t / dt))
    if abs(n * dt - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"t = {t} is not an integer multiple of dt = {dt}")
    return n


def _check_lattice(psi_lattice: Lattice, kernel: HamiltonianKernel):
    if psi_lattice != kernel.lattice:
        raise ValueError("state and kernel live on different lattices")


def evolve_schrodinger(psi: Wavefunction, kernel: HamiltonianKernel, t: float, dt: float) -> Wavefunction:
    """Evolve ``psi`` for time ``t`` in steps of ``dt``."""
    n = n_steps_for(t, dt)
    _check_lattice(psi.lattice, kernel)
    if n == 0:
        return psi
    out = Propagator.build(kernel, dt).apply(psi.amps, n)
    return Wavefunction(psi.lattice, out, psi.hbar)


def schrodinger_trajectory(psi: Wavefunction, kernel: HamiltonianKernel, t: float, dt: float,
                           record_every: int = 1):
    """Times and amplitude snapshots along an evolution."""
    n = n_steps_for(t, dt)
    _check_lattice(psi.lattice, kernel)
    steps, states = Propagator.build(kernel, dt).apply(psi.amps, n, record_every=max(1, record_every))
    return steps * dt, states


def exact_evolution(psi: Wavefunction, kernel: HamiltonianKernel, t: float) -> np.ndarray:
    """Dense reference ``expm(-i H t / hbar) psi``."""
    return la.expm(-1j * t / kernel.hbar * kernel.matrix) @ psi.amps


# --- (rho, phi) route --------------------------------------------------------

def pair_gradients(rho, phi, matrix, hbar: float):
    """``(dH/drho, dH/dphi)`` of ``psi^dag H psi`` in canonical variables."""
    psi = np.sqrt(rho) * np.exp(1j * phi / hbar)
    s = np.conj(psi) * (matrix @ psi)
    return s.real / rho, 2.0 / hbar * s.imag


def _fixed_point(fn, x0, tol: float, max_iter: int):
    x = x0
    for _ in range(max_iter):
        x_new = fn(x)
        if np.max(np.abs(x_new - x)) <= tol * max(1.0, np.max(np.abs(x_new))):
            return x_new
        x = x_new
    raise RuntimeError("implicit leapfrog stage did not converge; reduce dt")


def hamilton_flow(pair: EpistemicPair, kernel: HamiltonianKernel, t: float, dt: float,
                  tol: float = 1e-15, max_iter: int = 200) -> EpistemicPair:
    """Integrate the canonical (rho, phi) equations with generalized leapfrog.

    Each step is

    .. code-block:: text

        phi_h   = phi_n   - dt/2 dH/drho(rho_n,   phi_h)      (implicit)
        rho_n+1 = rho_n   + dt/2 [dH/dphi(rho_n, phi_h) + dH/dphi(rho_n+1, phi_h)]  (implicit)
        phi_n+1 = phi_h   - dt/2 dH/drho(rho_n+1, phi_h)

    with implicit stages solved by fixed-point iteration.  Raises
    ``NodeCrossingError`` if any ``rho`` drops to ``rho_floor``.
    """
    n = n_steps_for(t, dt)
    _check_lattice(pair.lattice, kernel)
    if n == 0:
        return pair
    hbar, h = kernel.hbar, 0.5 * dt
    floor = pair.rho_floor
    mat = kernel.matrix
    rho = np.array(pair.rho, dtype=float)
    phi = np.array(pair.phi, dtype=float)

    def check(r, step):
        bad = np.flatnonzero(r <= floor)
        if bad.size:
            raise NodeCrossingError(step, int(bad[0]), float(r[bad[0]]))

    check(rho, 0)
    for step in range(1, n + 1):
        phi_h = _fixed_point(lambda p: phi - h * pair_gradients(rho, p, mat, hbar)[0],
                             phi, tol, max_iter)
        drho0 = pair_gradients(rho, phi_h, mat, hbar)[1]

        def rho_map(r):
            if np.any(r <= floor):
                check(r, step)
            return rho + h * (drho0 + pair_gradients(r, phi_h, mat, hbar)[1])

        rho = _fixed_point(rho_map, rho + dt * drho0, tol, max_iter)
        check(rho, step)
        phi = phi_h - h * pair_gradients(rho, phi_h, mat, hbar)[0]
    return EpistemicPair(pair.lattice, rho, phi, pair.hbar, floor)


def phase_difference(phi_a, phi_b, hbar: float = 1.0) -> np.ndarray:
    """Elementwise ``phi_a - phi_b`` reduced modulo ``2 pi hbar``."""
    return wrap_phase(np.asarray(phi_a) - np.asarray(phi_b), 2 * np.pi * hbar)


def velocity_field(pair: EpistemicPair, mass: float) -> np.ndarray:
    """``v = (1/m) dphi/dx``; central differences inside, one-sided at the ends."""
    if not mass > 0:
        raise ValueError("mass must be positive")
    return np.gradient(pair.phi, pair.lattice.spacing) / mass


def continuity_residual(rho_dot, pair: EpistemicPair, mass: float) -> np.ndarray:
    """``drho/dt + d(rho v)/dx`` evaluated with central differences."""
    flux = pair.rho * velocity_field(pair, mass)
    return np.asarray(rho_dot) + np.gradient(flux, pair.lattice.spacing)


def harmonic_potential(lattice: Lattice, omega: float, mass: float = 1.0, center: float = 0.0) -> np.ndarray:
    return 0.5 * mass * omega**2 * (lattice.coords - center) ** 2


def square_well_potential(lattice: Lattice, depth: float, width: float, center: float = 0.0) -> np.ndarray:
    """``-depth`` inside ``|x - center| < width/2``, zero outside."""
    return np.where(np.abs(lattice.coords - center) < 0.5 * width, -float(depth), 0.0)
