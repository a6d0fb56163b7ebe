"""
Inferring a position from a noisy record
========================================

A classical amplifier turns the particle position x into a record a with
likelihood P(a|x).  The position is then inferred with Bayes' rule.
"""

import numpy as np

from edlab import Lattice, Wavefunction, born_position
from edlab.amplification import credible_set, gaussian_amplifier, infer_position, simulate_records

lat = Lattice.centered(32, 1.0)
psi = Wavefunction.gaussian(lat, center=0.0, width=5.0, momentum=0.4)
prior = born_position(psi)
amp = gaussian_amplifier(lat, Lattice.centered(96, 1.0), sigma_a=5.0)

xs, recs = simulate_records(amp, psi, 10_000, seed=3)
x, a = xs[0], recs[0]
post = infer_position(amp, prior, a)
print(f"first trial: x_true={lat.coord(x):+.1f}, record={amp.record_grid.coord(a):+.1f}, "
      f"posterior mean={np.dot(lat.coords, post):+.2f}")

# averaging the posteriors over records gives back the prior
p_a = amp.record_distribution(prior)
back = sum(p_a[a] * infer_position(amp, prior, a) for a in range(p_a.size) if p_a[a] > 0)
print("law of total probability:", f"{np.max(np.abs(back - prior)):.1e}")

hits = [credible_set(infer_position(amp, prior, a), 0.9)[x] for x, a in zip(xs, recs)]
print(f"90% credible sets cover x_true in {100 * np.mean(hits):.1f}% of trials")
