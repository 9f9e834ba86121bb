"""Three readings of the Euler number agree.

The linking number of the core circle with a nearby orbit, the degree of the
transition function around the fiber and half the divisor winding all give E.
"""

from bundlelab.blowup import divisor_field, linking_number, transition_degree
from bundlelab.flow import integrate, winding_count
from bundlelab.geometry import TWO_PI, ChartPoint
from bundlelab.hopf import LocalModel, hopf_field, local_model_field

print(" E  linking  degree  divisor/2")
for E in (1, 2, 3):
    f = local_model_field(LocalModel(E))
    core = integrate(f, ChartPoint("local-torus", (0.0, 0.0, 0.0)), TWO_PI, 1e-10)
    near = integrate(f, ChartPoint("local-torus", (0.25, 0.1, 0.0)), TWO_PI, 1e-10)
    div = integrate(divisor_field(E), ChartPoint("blowup-xu", (0.0, 0.0, 0.0)), TWO_PI, 1e-10)
    print(f"{E:2d}  {linking_number(core, near):7d}  {transition_degree(E):6d}  "
          f"{winding_count(div, 'u_rp1') // 2:9d}")

a = integrate(hopf_field(), ChartPoint("stereo-N", (0.3, 0.1, -0.2)), TWO_PI, 1e-10)
b = integrate(hopf_field(), ChartPoint("stereo-N", (-1.2, 0.5, 0.4)), TWO_PI, 1e-10)
print(f"two Hopf fibers link {linking_number(a, b)} time(s)")
