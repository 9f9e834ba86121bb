"""Leaves of the interpolating family close exactly when the two phases agree.

The fiber coordinate gains 2 pi lam alpha2/alpha1 from the drift and loses
pi lam^2 to the curvature of the Heisenberg connection.  On the profile
alpha2/alpha1 = lam/2 these cancel; off it the defect is the missed phase
mod 2 pi, which is why a fixed 5% error is invisible at some lam.
"""

import numpy as np

from bundlelab.thurston import (ThurstonParams, closure_defect, dynamical_phase, geometric_phase, leaf_geometry,
                                sweep, write_sweep_csv)

print("  lam   geometric   dynamical   defect(profile)  defect(5% off)")
for lam in (0.1, 0.5, 1.0, 2.0, 5.0, 20.0):
    on = ThurstonParams.on_profile(lam)
    off = ThurstonParams.on_profile(lam, 1.05)
    print(f"{lam:5.1f}  {geometric_phase(lam):10.6f}  {dynamical_phase(on):10.6f}  "
          f"{closure_defect(on)[0]:15.1e}  {closure_defect(off)[0]:14.4f}")

for lam in (0.05, 20.0):
    g = leaf_geometry(ThurstonParams.on_profile(lam))
    print(f"lam={lam}: base diameter {g['base_diameter']:.3f}, fiber fraction {g['fiber_fraction']:.3f}")

write_sweep_csv(sweep(np.arange(0.05, 5.0, 0.05)), "thurston_sweep.csv")
print("wrote thurston_sweep.csv")
