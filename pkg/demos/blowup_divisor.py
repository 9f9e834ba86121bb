"""Blowing up the core circle of the solid torus.

The lifted linear model with Euler number E extends across the divisor, where
the slope u runs around RP^1 2E times while the fiber angle turns once.  The
strict transform {arctan u = c} is crossed 2E times per period and the return
map to it has period exactly 2E, even after a tangent perturbation.
"""

import numpy as np

from bundlelab.blowup import divisor_field, lift_field, strict_transform_section
from bundlelab.experiments import perturbed_model
from bundlelab.flow import integrate, winding_count
from bundlelab.geometry import TWO_PI, ChartPoint
from bundlelab.rigidity import montgomery_check

for E in (1, 2, 3):
    traj = integrate(divisor_field(E), ChartPoint("blowup-xu", (0.0, 0.2, 0.0)), TWO_PI, 1e-10)
    print(f"E={E}: divisor orbit winds ({winding_count(traj, 'u_rp1')}, {winding_count(traj, 'phi')})")

rng = np.random.Generator(np.random.PCG64(2))
for E in (1, 2):
    f = lift_field(perturbed_model(E, 0.05, "mixed").field, E)
    rep = montgomery_check(f, strict_transform_section(E), E, 10, rng, 1e-9)
    print(f"E={E}, eps=0.05: |P^{2 * E} - Id| <= {rep['max_closing_displacement']:.1e}, "
          f"earlier iterates move >= {rep['min_over_k_of_max_displacement']:.2f}")
