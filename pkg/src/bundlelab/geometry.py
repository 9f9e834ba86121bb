"""Charts, coordinate transitions and the atlas shared by every other module.

Coordinates travel as :class:`ChartPoint` values: a chart name plus a tuple of
floats.  Angular components are stored in ``[0, 2pi)``.  All transitions are
registered on the module level :data:`ATLAS`.

Charts
------
ambient       points of S^3 in R^4
stereo-N      y = x'/(1 - x4)
stereo-S      y = x'/(1 + x4)
local-torus   (x, y, phi) with w = x + iy, a solid torus around the core circle
blowup-xu     (x, u, phi) with y = x u
blowup-vy     (v, y, phi) with x = y v
stereoN-xu    (y1, u, y3) blow-up of stereo-N along the y3 axis, y2 = y1 u
stereoN-vy    (v, y2, y3) with y1 = y2 v
stereoS-xu    same for stereo-S
stereoS-vy
torus2        (a, b) both angular, for linear flows on T^2
fiber-product (zx, zy, beta, xu) universal-cover coordinates for the 4-dimensional example
unit-tangent  (zx, zy, beta) on the unit tangent bundle of T^2
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, OverlapError, PoleError

TWO_PI = 2.0 * np.pi

# stereo charts are kept away from their pole: |x4 -+ 1| > 0.05
STEREO_RADIUS2 = (1.0 + 0.95) / (1.0 - 0.95)
# blow-up charts switch to the other chart once |u| (or |v|) exceeds this
BLOWUP_SLOPE = 2.0
CORE_MARGIN = 0.05  # radius below which blow-up charts are preferred to the polar picture
# hard limits used for domain validation
_HARD_RADIUS2 = 1e16
_HARD_SLOPE = 1e9


def wrap_angle(a):
    """Reduce angles to [0, 2pi)."""
    r = np.mod(a, TWO_PI)
    if np.ndim(r) == 0:
        return 0.0 if r >= TWO_PI else float(r)
    r[r >= TWO_PI] = 0.0
    return r


def wrap_signed(a, period=TWO_PI):
    """Reduce to the symmetric interval (-period/2, period/2]."""
    return period / 2 - np.mod(period / 2 - a, period)


def circular_distance(a, b, period=TWO_PI):
    d = np.mod(np.asarray(a) - np.asarray(b), period)
    return np.minimum(d, period - d)


@dataclass(frozen=True)
class Chart:
    name: str
    dim: int
    angular: tuple = ()
    domain: Callable = None  # hard domain predicate on coords
    margin: Callable = None  # > 0 when comfortably inside

    def contains(self, c) -> bool:
        return bool(np.all(np.isfinite(c))) and (self.domain is None or bool(self.domain(c)))

    def safety(self, c) -> float:
        return np.inf if self.margin is None else float(self.margin(c))

    def canonical(self, c):
        c = np.array(c, dtype=float)
        for i in self.angular:
            c[i] = wrap_angle(c[i])
        return c

    def difference(self, a, b):
        """Coordinate difference a - b with angular components taken the short way."""
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        for i in self.angular:
            d[i] = wrap_signed(d[i])
        return d

    def distance(self, a, b) -> float:
        return float(np.linalg.norm(self.difference(a, b)))


@dataclass(frozen=True)
class ChartPoint:
    chart: str
    coords: tuple

    def __post_init__(self):
        ch = ATLAS.chart(self.chart)
        c = np.asarray(self.coords, dtype=float)
        if c.shape != (ch.dim,):
            raise DomainError(f"{self.chart} expects {ch.dim} coordinates, got {c.shape}")
        if not ch.contains(c):
            raise DomainError(f"{tuple(c)} outside the domain of {self.chart}")
        object.__setattr__(self, "coords", tuple(float(v) for v in ch.canonical(c)))

    @property
    def array(self):
        return np.array(self.coords)

    def to(self, chart: str) -> "ChartPoint":
        return ATLAS.convert(self, chart)


@dataclass(frozen=True)
class AmbientPoint:
    x: tuple

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.shape != (4,) or abs(np.linalg.norm(x) - 1.0) > 1e-10:
            raise DomainError("ambient points must be unit vectors of R^4")
        object.__setattr__(self, "x", tuple(float(v) for v in x))


@dataclass
class Atlas:
    charts: dict = field(default_factory=dict)
    transitions: dict = field(default_factory=dict)

    def add_chart(self, chart: Chart):
        if chart.name in self.charts:
            raise ValueError(f"chart {chart.name} already registered")
        self.charts[chart.name] = chart

    def add_transition(self, a, b, fn, overlap):
        self.transitions[(a, b)] = (fn, overlap)

    def chart(self, name) -> Chart:
        try:
            return self.charts[name]
        except KeyError:
            raise DomainError(f"unknown chart {name!r}") from None

    def path(self, a, b):
        """Shortest chain of registered transitions from a to b (None when unreachable)."""
        if a == b:
            return [a]
        prev = {a: None}
        queue = deque([a])
        while queue:
            c = queue.popleft()
            for (s, t) in self.transitions:
                if s == c and t not in prev:
                    prev[t] = c
                    if t == b:
                        out = [b]
                        while prev[out[-1]] is not None:
                            out.append(prev[out[-1]])
                        return out[::-1]
                    queue.append(t)
        return None

    def convert_coords(self, a, c, b):
        """Map raw coordinates from chart a to chart b, raising OverlapError if impossible."""
        route = self.path(a, b)
        if route is None:
            raise OverlapError(f"no transition from {a} to {b}")
        c = np.asarray(c, dtype=float)
        for s, t in zip(route[:-1], route[1:]):
            fn, overlap = self.transitions[(s, t)]
            if not overlap(c):
                raise OverlapError(f"{tuple(c)} not in the overlap {s} -> {t}")
            c = self.charts[t].canonical(fn(c))
        return c

    def convert(self, p: ChartPoint, chart: str) -> ChartPoint:
        if p.chart == chart:
            return p
        return ChartPoint(chart, tuple(self.convert_coords(p.chart, p.coords, chart)))

    def best_chart(self, a, c, candidates):
        """Among candidate charts reachable from (a, c), the one with the largest safety margin."""
        best = None
        for name in candidates:
            try:
                cc = self.convert_coords(a, c, name)
            except (OverlapError, DomainError, PoleError, ZeroDivisionError, FloatingPointError):
                continue
            ch = self.charts[name]
            if not ch.contains(cc):
                continue
            m = ch.safety(cc)
            if best is None or m > best[0]:
                best = (m, name, cc)
        return best


ATLAS = Atlas()


def _radius2(c):
    return float(np.dot(c, c))


def _stereo_margin(c):
    return STEREO_RADIUS2 - _radius2(c)


def _stereo_domain(c):
    return _radius2(c) < _HARD_RADIUS2


def _xu_radius2(c):
    return c[0] ** 2 * (1.0 + c[1] ** 2) + c[2] ** 2


def _vy_radius2(c):
    return c[1] ** 2 * (1.0 + c[0] ** 2) + c[2] ** 2


def _slope_ok(i):
    return lambda c: abs(c[i]) < _HARD_SLOPE


for _c in [
    Chart("ambient", 4),
    Chart("stereo-N", 3, (), _stereo_domain, _stereo_margin),
    Chart("stereo-S", 3, (), _stereo_domain, _stereo_margin),
    # near the core the polar angle of w is badly conditioned, so charts of the blow-up win there
    Chart("local-torus", 3, (2,), None, lambda c: float(np.hypot(c[0], c[1])) - CORE_MARGIN),
    Chart("blowup-xu", 3, (2,), _slope_ok(1), lambda c: BLOWUP_SLOPE - abs(c[1])),
    Chart("blowup-vy", 3, (2,), _slope_ok(0), lambda c: BLOWUP_SLOPE - abs(c[0])),
    Chart("stereoN-xu", 3, (), lambda c: _slope_ok(1)(c) and _xu_radius2(c) < _HARD_RADIUS2,
          lambda c: min(BLOWUP_SLOPE - abs(c[1]), STEREO_RADIUS2 - _xu_radius2(c))),
    Chart("stereoN-vy", 3, (), lambda c: _slope_ok(0)(c) and _vy_radius2(c) < _HARD_RADIUS2,
          lambda c: min(BLOWUP_SLOPE - abs(c[0]), STEREO_RADIUS2 - _vy_radius2(c))),
    Chart("stereoS-xu", 3, (), lambda c: _slope_ok(1)(c) and _xu_radius2(c) < _HARD_RADIUS2,
          lambda c: min(BLOWUP_SLOPE - abs(c[1]), STEREO_RADIUS2 - _xu_radius2(c))),
    Chart("stereoS-vy", 3, (), lambda c: _slope_ok(0)(c) and _vy_radius2(c) < _HARD_RADIUS2,
          lambda c: min(BLOWUP_SLOPE - abs(c[0]), STEREO_RADIUS2 - _vy_radius2(c))),
    Chart("torus2", 2, (0, 1)),
    Chart("fiber-product", 4, (2,)),
    Chart("unit-tangent", 3, (2,)),
]:
    ATLAS.add_chart(_c)


# ---- stereographic projections -------------------------------------------

def stereo_north(p: AmbientPoint) -> ChartPoint:
    x = np.asarray(p.x)
    d = 1.0 - x[3]
    if abs(d) < 1e-9:
        raise PoleError("the north pole has no image in the north chart")
    return ChartPoint("stereo-N", tuple(x[:3] / d))


def stereo_south(p: AmbientPoint) -> ChartPoint:
    x = np.asarray(p.x)
    d = 1.0 + x[3]
    if abs(d) < 1e-9:
        raise PoleError("the south pole has no image in the south chart")
    return ChartPoint("stereo-S", tuple(x[:3] / d))


def _inv_north(y):
    r2 = float(np.dot(y, y))
    return np.concatenate([2.0 * y / (1.0 + r2), [(r2 - 1.0) / (r2 + 1.0)]])


def _inv_south(y):
    r2 = float(np.dot(y, y))
    return np.concatenate([2.0 * y / (1.0 + r2), [(1.0 - r2) / (r2 + 1.0)]])


def stereo_inverse(y: ChartPoint) -> AmbientPoint:
    c = np.asarray(y.coords)
    if y.chart == "stereo-N":
        x = _inv_north(c)
    elif y.chart == "stereo-S":
        x = _inv_south(c)
    else:
        raise DomainError("stereo_inverse needs a stereographic chart point")
    return AmbientPoint(tuple(x / np.linalg.norm(x)))


def _invert_sphere(y):
    return y / np.dot(y, y)


# ---- blow-up transitions -------------------------------------------------

def xu_to_vy(c):
    x, u, phi = c
    return np.array([1.0 / u, x * u, phi])


def vy_to_xu(c):
    v, y, phi = c
    return np.array([y * v, 1.0 / v, phi])


def blowup_chart_transition(p: ChartPoint) -> ChartPoint:
    """(x, u, phi) -> (1/u, x u, phi)."""
    if p.chart != "blowup-xu":
        raise DomainError("expected a blowup-xu point")
    if abs(p.coords[1]) < 1e-9:
        raise OverlapError("u = 0 is not in the overlap of the blow-up charts")
    return ChartPoint("blowup-vy", tuple(xu_to_vy(p.array)))


def sigma(p: ChartPoint) -> ChartPoint:
    """Blow-down map onto the solid torus; the divisor collapses onto the core circle."""
    c = p.array
    if p.chart == "blowup-xu":
        out = (c[0], c[0] * c[1], c[2])
    elif p.chart == "blowup-vy":
        out = (c[1] * c[0], c[1], c[2])
    else:
        raise DomainError("sigma is defined on the blow-up charts")
    return ChartPoint("local-torus", out)


def sigma_jacobian(chart, c):
    """Derivative of the blow-down map in the given blow-up chart."""
    a, b, _ = c
    if chart == "blowup-xu":
        return np.array([[1.0, 0.0, 0.0], [b, a, 0.0], [0.0, 0.0, 1.0]])
    if chart == "blowup-vy":
        return np.array([[b, a, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    raise DomainError(chart)


def _stereo_blowup_ns(c, i):
    # divisor fixed; inversion y -> y/|y|^2 written in blow-up coordinates
    rho = (c[i] ** 2) * (1.0 + c[1 - i] ** 2) + c[2] ** 2
    out = np.array(c, dtype=float)
    out[i] = c[i] / rho
    out[2] = c[2] / rho
    return out


def _nonzero(i, eps=1e-9):
    return lambda c: abs(c[i]) > eps


def _xu_nonpole(c):
    return _xu_radius2(c) > 1e-18


def _vy_nonpole(c):
    return _vy_radius2(c) > 1e-18


ATLAS.add_transition("ambient", "stereo-N", lambda x: x[:3] / (1.0 - x[3]), lambda x: abs(1.0 - x[3]) > 1e-9)
ATLAS.add_transition("ambient", "stereo-S", lambda x: x[:3] / (1.0 + x[3]), lambda x: abs(1.0 + x[3]) > 1e-9)
ATLAS.add_transition("stereo-N", "ambient", _inv_north, lambda y: True)
ATLAS.add_transition("stereo-S", "ambient", _inv_south, lambda y: True)
ATLAS.add_transition("stereo-N", "stereo-S", _invert_sphere, lambda y: np.dot(y, y) > 1e-18)
ATLAS.add_transition("stereo-S", "stereo-N", _invert_sphere, lambda y: np.dot(y, y) > 1e-18)

ATLAS.add_transition("blowup-xu", "blowup-vy", xu_to_vy, _nonzero(1))
ATLAS.add_transition("blowup-vy", "blowup-xu", vy_to_xu, _nonzero(0))
ATLAS.add_transition("blowup-xu", "local-torus", lambda c: np.array([c[0], c[0] * c[1], c[2]]), _nonzero(0))
ATLAS.add_transition("blowup-vy", "local-torus", lambda c: np.array([c[1] * c[0], c[1], c[2]]), _nonzero(1))
ATLAS.add_transition("local-torus", "blowup-xu", lambda c: np.array([c[0], c[1] / c[0], c[2]]), _nonzero(0))
ATLAS.add_transition("local-torus", "blowup-vy", lambda c: np.array([c[0] / c[1], c[1], c[2]]), _nonzero(1))

for _s in "NS":
    ATLAS.add_transition(f"stereo{_s}-xu", f"stereo{_s}-vy", xu_to_vy, _nonzero(1))
    ATLAS.add_transition(f"stereo{_s}-vy", f"stereo{_s}-xu", vy_to_xu, _nonzero(0))
    ATLAS.add_transition(f"stereo{_s}-xu", f"stereo-{_s}",
                         lambda c: np.array([c[0], c[0] * c[1], c[2]]), _nonzero(0))
    ATLAS.add_transition(f"stereo{_s}-vy", f"stereo-{_s}",
                         lambda c: np.array([c[1] * c[0], c[1], c[2]]), _nonzero(1))
    ATLAS.add_transition(f"stereo-{_s}", f"stereo{_s}-xu",
                         lambda c: np.array([c[0], c[1] / c[0], c[2]]), _nonzero(0))
    ATLAS.add_transition(f"stereo-{_s}", f"stereo{_s}-vy",
                         lambda c: np.array([c[0] / c[1], c[1], c[2]]), _nonzero(1))
ATLAS.add_transition("stereoN-xu", "stereoS-xu", lambda c: _stereo_blowup_ns(c, 0), _xu_nonpole)
ATLAS.add_transition("stereoS-xu", "stereoN-xu", lambda c: _stereo_blowup_ns(c, 0), _xu_nonpole)
ATLAS.add_transition("stereoN-vy", "stereoS-vy", lambda c: _stereo_blowup_ns(c, 1), _vy_nonpole)
ATLAS.add_transition("stereoS-vy", "stereoN-vy", lambda c: _stereo_blowup_ns(c, 1), _vy_nonpole)


def transition_jacobian(a, c, b, h=1e-4):
    """Jacobian of the transition a -> b at coords c by fourth-order central differences."""
    c = np.asarray(c, dtype=float)
    base = ATLAS.convert_coords(a, c, b)
    chart_b = ATLAS.chart(b)
    n, m = len(c), len(base)
    jac = np.empty((m, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        vals = [chart_b.difference(ATLAS.convert_coords(a, c + k * e, b), base) for k in (-2, -1, 1, 2)]
        jac[:, j] = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)
    return jac


def solid_torus_embedding(c, major=1.0):
    """Standard embedding of local-torus coordinates in R^3 around a core circle of radius `major`."""
    c = np.atleast_2d(c)
    x, y, phi = c[:, 0], c[:, 1], c[:, 2]
    return np.stack([(major + x) * np.cos(phi), (major + x) * np.sin(phi), y], axis=1)
