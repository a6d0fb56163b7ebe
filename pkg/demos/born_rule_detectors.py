"""
Detectors route states to positions
===================================

A detector is a unitary that routes each basis state |s_k> to a site x_k.
Outcome statistics are then just position statistics of the routed state.
"""

import numpy as np

from edlab import Lattice, Wavefunction, born_position
from edlab.detectors import (apply_unitary, bayes_collapse, born_rule, expectation, momentum_detector,
                             sample_outcomes)

lat = Lattice.centered(16, 0.5)
psi = Wavefunction.gaussian(lat, center=-1.0, width=1.2, momentum=2.0)
det = momentum_detector(lat)

# route through the device, then read positions
routed = apply_unitary(det, psi)
print("born rule == position statistics after routing:",
      np.allclose(born_rule(det, psi).probs, born_position(routed), atol=1e-15))

# mean momentum sits near the packet's momentum
print("<p> =", round(expectation(det, psi), 4))

counts = sample_outcomes(det, psi, 20_000, seed=1)
k = int(np.argmax(counts))
print("most frequent outcome: k =", k, "p =", round(det.eigenvalues[k], 3), "count =", counts[k])

# conditioning on that outcome, a repeated measurement agrees with certainty
after = bayes_collapse(det, psi, k)
print("repeat probability:", round(born_rule(det, after).probs[k], 12))
