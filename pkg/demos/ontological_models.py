"""
Ontic versus epistemic response functions
=========================================

Two packets with the same density but opposite momenta share every ontic
position distribution.  Any response that depends only on position must treat
them alike; a momentum measurement does not.
"""

import numpy as np

from edlab import Lattice, Wavefunction
from edlab.detectors import momentum_detector
from edlab.ontology import Preparation, ResponseFunction, marginalize, prep_distribution, verify_direct

lat = Lattice.centered(32, 0.5)
forward = Preparation(Wavefunction.gaussian(lat, 0.0, 1.5, 1.0), label="forward")
backward = Preparation(Wavefunction.gaussian(lat, 0.0, 1.5, -1.0), label="backward")
det = momentum_detector(lat)
print("same ontic distribution:", np.allclose(prep_distribution(forward), prep_distribution(backward)))

rng = np.random.default_rng(0)
ontic = ResponseFunction.ontic(rng.dirichlet(np.ones(32), size=32))
d_ontic = np.abs(marginalize(forward, ontic, det) - marginalize(backward, ontic, det)).sum()
ed = ResponseFunction.ed_epistemic()
d_ed = np.abs(marginalize(forward, ed, det) - marginalize(backward, ed, det)).sum()
print(f"L1 distance of outcome statistics: ontic response {d_ontic:.2e}, epistemic response {d_ed:.3f}")

rep = verify_direct(forward, det)
print(f"marginalizing over positions reproduces the quantum prediction: {rep.passed} "
      f"(max discrepancy {rep.max_discrepancy:.1e})")
