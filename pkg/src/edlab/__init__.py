"""Entropic-dynamics measurement laboratory on a finite lattice."""

from .amplification import (Amplifier, credible_set, gaussian_amplifier, infer_position, matrix_amplifier,
                            simulate_record, simulate_records)
from .detectors import (Detector, OutcomeDistribution, apply_unitary, bayes_collapse, born_rule, energy_detector,
                        expectation, from_hermitian, group_by_eigenvalue, momentum_detector, position_detector,
                        random_detector, sample_outcomes)
from .dynamics import (HamiltonianKernel, NodeCrossingError, Propagator, build_kernel, evolve_schrodinger,
                       hamilton_flow, velocity_field)
from .lattice import EpistemicPair, Lattice, Wavefunction, born_position, to_pair, to_psi
from .ontology import (OntState, Preparation, ResponseFunction, marginalize, prep_distribution, verify_direct,
                       verify_von_neumann)
from .pointer import (JointState, PointerDevice, classify_regime, couple, eigenvalue_marginal, infer_eigenvalue,
                      pointer_marginal, sample_pointer)

__version__ = "0.1.0"
