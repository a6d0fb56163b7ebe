"""
Reading an inferable off a pointer
==================================

The impulsive coupling shifts a Gaussian pointer by the eigenvalue of each
detector component.  Narrow pointers resolve the bumps; wide ones only move
the mean, which still equals the expectation value.
"""

import numpy as np

from edlab import Lattice, Wavefunction
from edlab.detectors import expectation, random_detector
from edlab.pointer import (PointerDevice, classify_regime, couple, eigenvalue_marginal, infer_eigenvalue,
                           pointer_mean, sample_pointer)

rng = np.random.default_rng(4)
lat = Lattice(6)
det = random_detector(lat, rng, eigenvalues=np.arange(6, dtype=float))
psi = Wavefunction.random(lat, rng)
print("<M> =", round(expectation(det, psi), 6))

for sigma in (0.05, 3.0):
    ptr = PointerDevice.covering(sigma, det.eigenvalues, 2048)
    joint = couple(det, psi, ptr)
    regime = classify_regime(ptr, det.eigenvalues)
    print(f"sigma={sigma}: {regime.label} (r={regime.ratio:.1f}), pointer mean={pointer_mean(joint):.6f}, "
          f"largest Schmidt coefficients={np.round(joint.schmidt_coefficients()[:2], 4)}")
    print("   eigenvalue statistics:", np.round(eigenvalue_marginal(joint), 4))

# in the strong regime a single reading identifies the eigenvalue
ptr = PointerDevice.covering(0.05, det.eigenvalues, 2048)
joint = couple(det, psi, ptr)
xf, ks = sample_pointer(joint, 5, seed=2, return_k=True)
for x, k in zip(xf, ks):
    post = infer_eigenvalue(joint, det.eigenvalues, x)
    print(f"X_f={x:+.3f}  generated by k={k}  inferred k={np.argmax(post)}  posterior={post.max():.6f}")
