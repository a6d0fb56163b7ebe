"""
Two routes to the same dynamics
===============================

Evolve a Gaussian packet once as a wave function and once as the canonical
pair (rho, phi), then compare.
"""

import numpy as np

from edlab import Lattice, Wavefunction, build_kernel, evolve_schrodinger, hamilton_flow, to_pair
from edlab.dynamics import continuity_residual, phase_difference, velocity_field

lat = Lattice.centered(64, 0.25)
kernel = build_kernel(lat, mass=1.0, potential=np.zeros(64))
psi = Wavefunction.gaussian(lat, center=0.0, width=1.5, momentum=0.7)

for dt in (1e-3, 5e-4, 2.5e-4):
    a = hamilton_flow(to_pair(psi), kernel, 0.5, dt)
    b = to_pair(evolve_schrodinger(psi, kernel, 0.5, dt))
    print(f"dt={dt:.1e}  max|d rho|={np.max(np.abs(a.rho - b.rho)):.2e}  "
          f"max|d phi|={np.max(np.abs(phase_difference(a.phi, b.phi))):.2e}")

# the probability current follows the phase gradient
dt = 1e-3
before = evolve_schrodinger(psi, kernel, 0.25 - dt, dt)
mid = evolve_schrodinger(before, kernel, dt, dt)
after = evolve_schrodinger(mid, kernel, dt, dt)
rho_dot = (np.abs(after.amps) ** 2 - np.abs(before.amps) ** 2) / (2 * dt)
pair = to_pair(mid)
print("peak velocity:", round(float(velocity_field(pair, 1.0)[np.argmax(pair.rho)]), 4))
print("max continuity residual:", f"{np.max(np.abs(continuity_residual(rho_dot, pair, 1.0))):.2e}")
