"""Linearizing a periodic disc map by averaging, then suspending the result.

P = h R h^-1 with h a quadratic shear has P^l = Id.  The average
zeta = (1/l) sum R^-k P^k conjugates P to the rotation R, and flowing zeta
around the solid torus conjugates the whole suspension to the linear model.
"""

import numpy as np

from bundlelab.rigidity import (DiscShear, bochner_linearize, conjugated_linear_field, conjugated_rotation,
                                numerical_return_map, polar_samples, rotation, suspend_conjugacy,
                                suspension_residuals)
from bundlelab.experiments import random_tube_point

shear = DiscShear(0.05)
w = polar_samples(0.4, 32, 32)
for l in (1, 2, 3):
    P = conjugated_rotation(l, shear)
    zeta = bochner_linearize(P, l)
    print(f"l={l}: |P - R| = {np.max(np.abs(P(w) - rotation(l)(w))):.1e}, "
          f"|zeta P - R zeta| = {np.max(np.abs(zeta(P(w)) - rotation(l)(zeta(w)))):.1e}")

l = 2
X = conjugated_linear_field(l, shear)
zeta = bochner_linearize(numerical_return_map(X, 1e-11), l, samples=polar_samples(0.4, 2, 4))
eta = suspend_conjugacy(zeta, X, l, tol=1e-11)
rng = np.random.Generator(np.random.PCG64(4))
pts = [random_tube_point(rng, 0.05, 0.35) for _ in range(3)]
print(f"suspension residual for l={l}: {suspension_residuals(eta, pts, [1.0, 2.5, 4.0]).max():.1e}")
