"""Preparations, response functions and the marginalization over ontic states.

Ontic states ``lambda_i`` are lattice positions ``x_i`` (and pointer grid
cells ``X_i`` when a pointer is present), so every integral over
``lambda_i`` is a finite sum.  Two response families are supported:

``ontic``
    ``p(k | M, lambda_i)``, a table indexed by ontic state; the outcome
    depends on the preparation only through ``lambda_i``.
``ed_epistemic``
    ``p(k | M, psi, pi)``, the quantum prediction, independent of
    ``lambda_i`` and conditioned on the epistemic state instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .detectors import Detector, born_rule
from .lattice import Wavefunction, born_position
from .pointer import PointerDevice, couple, eigenvalue_marginal

ROW_TOL = 1e-10
DIRECT_PASS = 1e-12
VON_NEUMANN_PASS = 1e-10


@dataclass(frozen=True)
class Preparation:
    psi: Wavefunction
    pointer: PointerDevice | None = None
    label: str = ""


@dataclass(frozen=True)
class OntState:
    x_i: int
    X_i: int | None = None


def ont_states(prep: Preparation) -> list[OntState]:
    """Ontic states in the order used by ``prep_distribution(...).ravel()``."""
    n = prep.psi.n_sites
    if prep.pointer is None:
        return [OntState(j) for j in range(n)]
    m = prep.pointer.grid.n_sites
    return [OntState(j, J) for j in range(n) for J in range(m)]


def prep_distribution(prep: Preparation) -> np.ndarray:
    """``p(lambda_i | P) = |psi(x_i) pi(X_i)|^2``.

    Shape ``(n_sites,)`` without a pointer, ``(n_sites, n_grid)`` with one.
    The result depends on the preparation alone.
    """
    p_sys = born_position(prep.psi)
    if prep.pointer is None:
        return p_sys
    p_ptr = np.abs(prep.pointer.ready_state()) ** 2
    return np.outer(p_sys, p_ptr / p_ptr.sum())


@dataclass(frozen=True, eq=False)
class ResponseFunction:
    kind: str
    table: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.kind not in ("ontic", "ed_epistemic"):
            raise ValueError(f"unknown response kind {self.kind!r}")
        if self.kind == "ontic":
            t = np.asarray(self.table, dtype=float)
            if t.ndim != 2:
                raise ValueError("ontic response table must be 2-D (ontic state, outcome)")
            if np.any(t < 0) or np.max(np.abs(t.sum(axis=1) - 1.0)) > ROW_TOL:
                raise ValueError("each response row must be a probability vector")
            object.__setattr__(self, "table", t)

    @classmethod
    def ontic(cls, table) -> "ResponseFunction":
        return cls("ontic", np.asarray(table, dtype=float))

    @classmethod
    def ed_epistemic(cls) -> "ResponseFunction":
        return cls("ed_epistemic")

    @classmethod
    def deterministic(cls, outcome_of, n_states: int, n_outcomes: int) -> "ResponseFunction":
        """Ontic response with ``k = outcome_of(lambda_index)`` with certainty."""
        t = np.zeros((n_states, n_outcomes))
        for i in range(n_states):
            t[i, outcome_of(i)] = 1.0
        return cls.ontic(t)

    @classmethod
    def de_broglie_bohm(cls, prep: Preparation, detector: Detector) -> "ResponseFunction":
        """Ontic-kind table whose rows all carry the quantum prediction for ``prep.psi``.

        This mirrors a model where ``psi`` is part of the ontic state: once
        ``psi`` is fixed, the rest of the preparation is irrelevant.
        """
        q = quantum_prediction(prep, detector)
        n_states = prep_distribution(prep).size
        return cls.ontic(np.tile(q, (n_states, 1)))


def quantum_prediction(prep: Preparation, detector: Detector) -> np.ndarray:
    """``p(k | M, psi, pi)``: outcome probabilities given the epistemic state."""
    if prep.pointer is None:
        return born_rule(detector, prep.psi).probs
    return eigenvalue_marginal(couple(detector, prep.psi, prep.pointer))


def marginalize(prep: Preparation, response: ResponseFunction, detector: Detector,
                prep_dist=None) -> np.ndarray:
    """``p(k | M, P) = sum_lambda p(lambda | P) p(k | M, P, lambda)``.

    ``prep_dist`` replaces the preparation's own ontic distribution; it is
    how the lambda-independence of the epistemic response is probed.
    """
    weights = prep_distribution(prep) if prep_dist is None else np.asarray(prep_dist, dtype=float)
    weights = weights.ravel()
    n_out = detector.lattice.n_sites
    if response.kind == "ontic":
        if response.table.shape != (weights.size, n_out):
            raise ValueError(
                f"response table {response.table.shape} does not match "
                f"{weights.size} ontic states x {n_out} outcomes"
            )
        out = weights @ response.table
    else:
        if prep_dist is not None and weights.size != prep_distribution(prep).size:
            raise ValueError("substituted ontic distribution has the wrong size")
        q = quantum_prediction(prep, detector)
        out = np.sum(weights[:, None] * q[None, :], axis=0)
    return out / out.sum()


@dataclass
class IdentityReport:
    identity: str
    max_discrepancy: float
    passed: bool
    threshold: float
    instances: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "identity": self.identity,
            "max_discrepancy": self.max_discrepancy,
            "pass": self.passed,
            "threshold": self.threshold,
        }
        out.update(self.details)
        out["instances"] = self.instances
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _dense_probs(detector: Detector, psi: Wavefunction) -> np.ndarray:
    # column-by-column inner products, independent of born_rule's matrix route
    return np.array([abs(np.vdot(detector.basis[:, k], psi.amps)) ** 2
                     for k in range(detector.basis.shape[1])])


def verify_direct(prep: Preparation, detector: Detector) -> IdentityReport:
    """Check ``sum_x |psi(x)|^2 |<s_k|psi>|^2 = |<s_k|psi>|^2`` on the lattice."""
    if prep.pointer is not None:
        raise ValueError("direct verification takes a preparation without a pointer")
    lhs = marginalize(prep, ResponseFunction.ed_epistemic(), detector)
    rhs = _dense_probs(detector, prep.psi)
    d = float(np.max(np.abs(lhs - rhs)))
    return IdentityReport("Born e", d, d < DIRECT_PASS, DIRECT_PASS)


def verify_von_neumann(prep: Preparation, detector: Detector) -> IdentityReport:
    """Full chain: ontic prior times ``p(alpha_k, X_f | M, psi, pi)``, summed over ``lambda_i`` and ``X_f``."""
    if prep.pointer is None:
        raise ValueError("von Neumann verification needs a pointer")
    lam = prep_distribution(prep).ravel()
    joint = couple(detector, prep.psi, prep.pointer).joint_distribution()
    # the epistemic response ignores lambda_i, so the lambda sum only carries the prior mass
    p_k_xf = np.einsum("l,kx->kx", lam, joint)
    p_k = p_k_xf.sum(axis=1)
    rhs = _dense_probs(detector, prep.psi)
    d = float(np.max(np.abs(p_k - rhs)))
    return IdentityReport("Born f", d, d < VON_NEUMANN_PASS, VON_NEUMANN_PASS)
