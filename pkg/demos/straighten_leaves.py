"""Moving a curve of closed leaves onto the core circle.

The leaf x = eps cos phi, y = eps sin phi is pushed onto the core by the
time-one flow of a cut-off translation, which is the identity outside the tube.
"""

import numpy as np

from bundlelab.geometry import TWO_PI, ChartPoint
from bundlelab.hopf import straighten_seifert_curve


def circle(phi, eps):
    return eps * np.cos(phi), eps * np.sin(phi)


eta = straighten_seifert_curve(circle, 0.1)
worst = 0.0
for phi in np.linspace(0.0, TWO_PI, 64, endpoint=False):
    q = eta(ChartPoint("local-torus", (*circle(phi, 0.1), phi)))
    worst = max(worst, float(np.hypot(q.coords[0], q.coords[1])))
print(f"leaf points end within {worst:.1e} of the core")
far = ChartPoint("local-torus", (0.7, 0.1, 2.0))
print(f"a point outside the tube moves by {np.max(np.abs(eta(far).array - far.array)):.1e}")
