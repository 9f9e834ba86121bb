"""A perturbed circle bundle is conjugate to the model.

Lift a tangent perturbation to the blow-up, isochronize it with the period
function read off the strict transform, then map its orbits onto model orbits
by matching times since the last crossing of {phi = 0}.
"""

import numpy as np

from bundlelab.blowup import lift_field, strict_transform_section
from bundlelab.experiments import perturbed_model, random_tube_point, rigidity_pipeline
from bundlelab.geometry import TWO_PI
from bundlelab.rigidity import conjugacy_residuals, period_function

E, eps = 1, 0.05
lifted = lift_field(perturbed_model(E, eps, "twist").field, E)
T = period_function(lifted, strict_transform_section(E), E, 1e-10)
rng = np.random.Generator(np.random.PCG64(3))
for _ in range(3):
    p = random_tube_point(rng)
    print(f"period of the perturbed orbit through {np.round(p.coords, 3)}: {T(p):.6f}")

_, _, phi = rigidity_pipeline(E, eps, "twist", 1e-9)
pts = [random_tube_point(rng) for _ in range(4)]
res = conjugacy_residuals(phi, pts, [0.25 * k * TWO_PI for k in range(1, 5)])
print(f"max |phi(flow_eps^t p) - flow_0^t phi(p)| over 16 samples: {res.max():.1e}")
