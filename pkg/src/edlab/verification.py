"""Batch checks of the quantum identities over random instances."""

from __future__ import annotations

import numpy as np

from . import rng as _rng
from .detectors import random_detector
from .dynamics import build_kernel, evolve_schrodinger, hamilton_flow, phase_difference
from .lattice import Lattice, Wavefunction, to_pair
from .ontology import IdentityReport, Preparation, verify_direct, verify_von_neumann
from .pointer import PointerDevice, couple, eigenvalue_marginal

BORN_E_SIZES = (2, 8, 16)
BORN_F_SIGMAS = (0.01, 0.1, 1.0)
SIGMA_DRIFT_TOL = 1e-8
ROUTE_RHO_TOL = 1e-6
ROUTE_PHI_TOL = 1e-5


def _instance_rng(seed: int, i: int) -> np.random.Generator:
    return _rng.generator(_rng.derive_seed(seed, i))


def verify_born_e(instances: int = 100, seed: int = 0, threshold: float = 1e-14) -> IdentityReport:
    """Direct-measurement identity on random (state, detector) pairs."""
    rows, worst = [], 0.0
    for i in range(instances):
        g = _instance_rng(seed, i)
        lat = Lattice(BORN_E_SIZES[i % len(BORN_E_SIZES)])
        rep = verify_direct(Preparation(Wavefunction.random(lat, g)), random_detector(lat, g))
        worst = max(worst, rep.max_discrepancy)
        rows.append({"instance": i, "n_sites": lat.n_sites, "max_discrepancy": rep.max_discrepancy})
    return IdentityReport("Born e", worst, worst < threshold, threshold, rows)


def verify_born_f(instances: int = 100, seed: int = 0, sigmas=BORN_F_SIGMAS,
                  n_sites: int = 8, n_grid: int = 1024, threshold: float = 1e-10) -> IdentityReport:
    """Von Neumann identity, each instance at every pointer width in ``sigmas``.

    Also records the drift of the eigenvalue statistics across widths; the
    report passes only if that drift stays below ``SIGMA_DRIFT_TOL`` too.
    """
    rows, worst, worst_drift = [], 0.0, 0.0
    for i in range(instances):
        g = _instance_rng(seed, i)
        lat = Lattice(n_sites)
        alpha = g.integers(0, 3, size=n_sites).astype(float)
        det = random_detector(lat, g, eigenvalues=alpha)
        psi = Wavefunction.random(lat, g)
        per_sigma, local = [], 0.0
        for s in sigmas:
            ptr = PointerDevice.covering(s, alpha, n_grid)
            rep = verify_von_neumann(Preparation(psi, ptr), det)
            local = max(local, rep.max_discrepancy)
            per_sigma.append(eigenvalue_marginal(couple(det, psi, ptr)))
        drift = float(np.max(np.ptp(np.array(per_sigma), axis=0)))
        worst, worst_drift = max(worst, local), max(worst_drift, drift)
        rows.append({"instance": i, "max_discrepancy": local, "sigma_drift": drift})
    return IdentityReport("Born f", worst, worst < threshold and worst_drift < SIGMA_DRIFT_TOL,
                          threshold, rows, {"sigma_drift": worst_drift, "sigmas": list(sigmas)})


def random_packet(lattice: Lattice, g: np.random.Generator) -> Wavefunction:
    center = g.uniform(-1.0, 1.0)
    width = g.uniform(1.3, 1.8)
    momentum = g.uniform(-1.0, 1.0)
    return Wavefunction.gaussian(lattice, center, width, momentum)


def route_gap(psi: Wavefunction, kernel, t: float, dt: float) -> tuple[float, float]:
    """``(max |d rho|, max |d phi mod 2 pi hbar|)`` between the two evolution routes."""
    a = hamilton_flow(to_pair(psi), kernel, t, dt)
    b = to_pair(evolve_schrodinger(psi, kernel, t, dt))
    return (float(np.max(np.abs(a.rho - b.rho))),
            float(np.max(np.abs(phase_difference(a.phi, b.phi, kernel.hbar)))))


def verify_route_equivalence(instances: int = 5, seed: int = 0, n_sites: int = 64,
                             spacing: float = 0.25, t: float = 0.5, dt: float = 2.5e-4) -> IdentityReport:
    """Hamilton (rho, phi) flow against Schrodinger flow on nodeless Gaussian packets."""
    lat = Lattice.centered(n_sites, spacing)
    kernel = build_kernel(lat, 1.0, np.zeros(n_sites))
    rows, worst_rho, worst_phi = [], 0.0, 0.0
    for i in range(instances):
        psi = random_packet(lat, _instance_rng(seed, i))
        d_rho, d_phi = route_gap(psi, kernel, t, dt)
        worst_rho, worst_phi = max(worst_rho, d_rho), max(worst_phi, d_phi)
        rows.append({"instance": i, "max_rho_gap": d_rho, "max_phi_gap": d_phi})
    passed = worst_rho < ROUTE_RHO_TOL and worst_phi < ROUTE_PHI_TOL
    return IdentityReport("route-equivalence", max(worst_rho, worst_phi), passed, ROUTE_PHI_TOL, rows,
                          {"max_rho_gap": worst_rho, "max_phi_gap": worst_phi, "dt": dt, "t": t})


CHECKS = {
    "born_e": verify_born_e,
    "born_f": verify_born_f,
    "route_equivalence": verify_route_equivalence,
}
