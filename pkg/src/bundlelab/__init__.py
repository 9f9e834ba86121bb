"""Numerical toolkit for circle bundles, their isochronous flows and perturbations.

Submodules: geometry (charts and atlas), flow (integration, sections, return
maps), hopf (Hopf field, linear model, perturbations), blowup (lift along a
fiber, sections, linking), rigidity (period function, conjugacies, Bochner
averaging), thurston (Heisenberg fiber-product family), experiments and cli.
"""

from .errors import *  # noqa: F401,F403
from .geometry import ATLAS, AmbientPoint, ChartPoint
from .flow import Section, Trajectory, VectorField, integrate, minimal_period, return_map

__version__ = "0.1.0"
