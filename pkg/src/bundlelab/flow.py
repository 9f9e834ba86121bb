"""Adaptive integration of chart-aware vector fields.

The stepper is the Dormand-Prince 5(4) pair with a PI step-size controller.
After every accepted step the state is moved to another chart if it has left
the safety margin of the current one.  Trajectories keep the raw step data so
that states at intermediate times can be recomputed with one extra step from
the nearest accepted sample, which is how section crossings and periods are
polished.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy.optimize import brentq

from .errors import ChartExit, DomainError, NoReturn, NotClosed, OverlapError, StepFailure, TangentialCrossing
from .geometry import ATLAS, TWO_PI, ChartPoint, wrap_signed

# Dormand-Prince tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = _B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])

DEFAULT_HMAX = 0.2
DEFAULT_TMAX = 4 * TWO_PI  # 8 pi


@dataclass(frozen=True)
class VectorField:
    """Tangent-vector evaluators, one per supported chart, acting on raw coordinate arrays."""

    evaluators: Mapping[str, Callable]
    jac_on_curve: Callable | None = None
    name: str = ""

    @property
    def supported_charts(self):
        return frozenset(self.evaluators)

    def __call__(self, p: ChartPoint) -> np.ndarray:
        return self.eval(p.chart, p.array)

    def eval(self, chart, c):
        try:
            fn = self.evaluators[chart]
        except KeyError:
            raise DomainError(f"{self.name or 'field'} is not defined on chart {chart}") from None
        return np.asarray(fn(np.asarray(c, dtype=float)), dtype=float)


@dataclass(frozen=True)
class ReparametrizedField(VectorField):
    """factor(p) * base(p) for a factor that is constant along orbits of base.

    Because the factor is a first integral, the flow is the base flow run for
    factor(p0) * t, which is how :func:`integrate` treats it.
    """

    base: VectorField = None
    factor: Callable = None


def scaled_field(base: VectorField, factor: Callable, name="") -> ReparametrizedField:
    ev = {ch: (lambda c, ch=ch: factor(ChartPoint(ch, tuple(c))) * base.eval(ch, c)) for ch in base.evaluators}
    return ReparametrizedField(ev, base.jac_on_curve, name or base.name, base, factor)


def zero_field(charts) -> VectorField:
    return VectorField({ch: (lambda c: np.zeros_like(c)) for ch in charts}, name="zero")


# ---- angular observables ---------------------------------------------------

OBSERVABLES: dict = {}


def register_observable(name, period, per_chart):
    """per_chart maps chart name -> function(coords) -> angle, consistent across charts mod period.

    Registering an existing name adds charts to it.
    """
    if name in OBSERVABLES:
        old_period, old = OBSERVABLES[name]
        if old_period != period:
            raise ValueError(f"observable {name} already registered with period {old_period}")
        per_chart = {**old, **per_chart}
    OBSERVABLES[name] = (period, dict(per_chart))


register_observable("phi", TWO_PI, {ch: (lambda c: c[2]) for ch in ("local-torus", "blowup-xu", "blowup-vy")})


# ---- trajectories ----------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    charts: tuple
    coords: tuple  # raw arrays, angular components not wrapped
    derivs: tuple  # field values at the samples (in the sample chart)
    ends: tuple  # (end state, end derivative) of step i before any chart switch
    tolerance: float
    field: VectorField = field(repr=False, default=None)
    time_scale: float = 1.0  # flow time = base time / time_scale
    switches: tuple = ()

    @property
    def samples(self):
        return [(float(t), ChartPoint(ch, tuple(c))) for t, ch, c in zip(self.times, self.charts, self.coords)]

    @property
    def start(self) -> ChartPoint:
        return ChartPoint(self.charts[0], tuple(self.coords[0]))

    @property
    def end(self) -> ChartPoint:
        return ChartPoint(self.charts[-1], tuple(self.coords[-1]))

    @property
    def n_steps(self):
        return len(self.times) - 1

    @property
    def winding(self):
        out = {}
        for name, (_, per_chart) in OBSERVABLES.items():
            if set(self.charts) <= set(per_chart):
                out[name] = winding_count(self, name)
        return out

    def _interval(self, t):
        times = self.times
        if len(times) == 1:
            return 0
        if times[-1] >= times[0]:
            i = int(np.searchsorted(times, t, side="right")) - 1
        else:
            i = int(np.searchsorted(-times, -t, side="right")) - 1
        return min(max(i, 0), len(times) - 2)

    def hermite(self, t):
        """Cubic Hermite interpolant; returns (chart, coords) in the chart of the step containing t."""
        i = self._interval(t)
        t0, t1 = self.times[i], self.times[i + 1]
        y0, f0 = self.coords[i], self.derivs[i]
        y1, f1 = self.ends[i]
        h = t1 - t0
        s = (t - t0) / h
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        dt = h * self.time_scale
        return self.charts[i], h00 * y0 + h10 * dt * f0 + h01 * y1 + h11 * dt * f1

    def state_at(self, t):
        """Accurate state at time t: one Runge-Kutta step from the preceding sample."""
        i = self._interval(t)
        t0 = self.times[i]
        if t == t0:
            return self.charts[i], self.coords[i].copy()
        if i + 1 < len(self.times) and t == self.times[i + 1]:
            return self.charts[i], self.ends[i][0].copy()
        ch = self.charts[i]
        base = self.field.base if isinstance(self.field, ReparametrizedField) else self.field
        ev = base.evaluators[ch]
        y, _, _ = _dp_step(ev, self.coords[i], self.derivs[i], (t - t0) * self.time_scale)
        return ch, y

    def point_at(self, t) -> ChartPoint:
        ch, c = self.state_at(t)
        return ChartPoint(ch, tuple(c))

    def resample(self, n):
        """n points evenly spaced in time (Hermite interpolation), as (chart, coords) pairs."""
        ts = np.linspace(self.times[0], self.times[-1], n)
        return ts, [self.hermite(t) for t in ts]

    def truncated(self, t_end):
        """Trajectory restricted to [t0, t_end] with an exact final state."""
        fwd = self.times[-1] >= self.times[0]
        keep = [i for i, t in enumerate(self.times) if (t < t_end if fwd else t > t_end)]
        if not keep:
            keep = [0]
        k = keep[-1]
        ch, y = self.state_at(t_end)
        base = self.field.base if isinstance(self.field, ReparametrizedField) else self.field
        f_end = base.eval(ch, y)
        ends = list(self.ends[:k]) + [(y, f_end)]
        return Trajectory(
            np.append(self.times[: k + 1], t_end), self.charts[: k + 1] + (ch,),
            self.coords[: k + 1] + (y,), self.derivs[: k + 1] + (f_end,), tuple(ends),
            self.tolerance, self.field, self.time_scale,
            tuple(s for s in self.switches if s[0] <= k),
        )

    def concatenate(self, other: "Trajectory") -> "Trajectory":
        """Join a trajectory that starts where this one ends."""
        shift = self.times[-1] - other.times[0]
        off = len(self.times) - 1
        return Trajectory(
            np.concatenate([self.times, other.times[1:] + shift]),
            self.charts + other.charts[1:], self.coords + other.coords[1:],
            self.derivs + other.derivs[1:], self.ends + other.ends,
            max(self.tolerance, other.tolerance), self.field, self.time_scale,
            self.switches + tuple((i + off, a, b) for i, a, b in other.switches),
        )


def _dp_step(ev, y, f0, h):
    """One Dormand-Prince step; returns (y_new, f(y_new), error estimate)."""
    k = [f0]
    for j in range(1, 7):
        a = _A[j]
        yy = y + h * sum(a[m] * k[m] for m in range(j) if a[m] != 0.0)
        k.append(ev(yy))
    err = h * sum(_E[m] * k[m] for m in range(7) if _E[m] != 0.0)
    return yy, k[6], err


def _error_norm(err, y, y_new, tol):
    scale = tol * (1.0 + np.maximum(np.abs(y), np.abs(y_new)))
    return float(np.max(np.abs(err) / scale))


def _run(f, p0, t_final, tol, h_max=DEFAULT_HMAX, event=None, h0=None):
    if tol <= 0:
        raise ValueError("tol must be positive")
    if p0.chart not in f.evaluators:
        best = ATLAS.best_chart(p0.chart, p0.array, f.supported_charts)
        if best is None:
            raise ChartExit(f"no supported chart contains the start point {p0}")
        p0 = ChartPoint(best[1], tuple(best[2]))

    scale = 1.0
    if isinstance(f, ReparametrizedField):
        scale = float(f.factor(p0))
        field_used = f.base
    else:
        field_used = f
    evs = field_used.evaluators
    # switch only between charts of the same manifold: a flow started on S^3 in a stereographic
    # chart must not leave it for the ambient R^4 form of the field
    dim = ATLAS.chart(p0.chart).dim
    charts_ok = [ch for ch in field_used.supported_charts if ATLAS.chart(ch).dim == dim]

    T = float(t_final) * scale  # base time
    direction = 1.0 if T >= 0 else -1.0
    chart = p0.chart
    y = np.array(p0.coords, dtype=float)
    fy = field_used.eval(chart, y)
    times, charts, coords, derivs, ends, switches = [0.0], [chart], [y], [fy], [], []
    if h_max is None:
        h_max = np.inf
    t = 0.0
    h = min(h0 or 0.01, h_max, abs(T)) if T != 0 else 0.0
    err_prev = 1.0
    h_min = 1e-13 * max(1.0, abs(T))
    result = None
    n_reject = 0
    while direction * (T - t) > 1e-14 * max(1.0, abs(T)):
        h = min(h, abs(T - t))
        ev = evs[chart]
        try:
            with np.errstate(all="raise"):
                y_new, f_new, err = _dp_step(ev, y, fy, direction * h)
            ok = np.all(np.isfinite(y_new)) and ATLAS.chart(chart).contains(y_new)
        except (FloatingPointError, ZeroDivisionError, OverflowError, DomainError):
            ok = False
        if not ok:
            h *= 0.25
            n_reject += 1
            if h < h_min:
                raise StepFailure(f"step size underflow at t={t / scale:g} in chart {chart}")
            continue
        e = _error_norm(err, y, y_new, tol)
        if e <= 1.0:
            t_new = t + direction * h
            if abs(T - t_new) < 1e-14 * max(1.0, abs(T)):
                t_new = T
            ends.append((y_new, f_new))
            prev = (t, y, fy, chart)
            t, y, fy = t_new, y_new, f_new
            new_chart = chart
            if ATLAS.chart(chart).safety(y) < 0:
                best = ATLAS.best_chart(chart, y, charts_ok)
                if best is None or not ATLAS.chart(best[1]).contains(best[2]):
                    raise ChartExit(f"no supported chart covers {tuple(y)}")
                if best[1] != chart and best[0] > ATLAS.chart(chart).safety(y):
                    new_chart = best[1]
                    y = np.array(best[2], dtype=float)
                    fy = field_used.eval(new_chart, y)
                    switches.append((len(times), chart, new_chart))
            times.append(t)
            charts.append(new_chart)
            coords.append(y)
            derivs.append(fy)
            if event is not None:
                result = event(prev, (t, y_new, f_new, chart), len(times) - 2, _Partial(
                    times, charts, coords, derivs, ends, tol, f, scale))
            chart = new_chart
            fac = 0.9 * e ** (-0.7 / 5) * err_prev ** (0.4 / 5) if e > 0 else 5.0
            h = h * min(5.0, max(0.2, fac))
            h = min(h, h_max)
            err_prev = max(e, 1e-4)
            if result is not None:
                break
        else:
            h *= max(0.2, 0.9 * e ** (-0.2))
            n_reject += 1
            if h < h_min:
                raise StepFailure(f"step size underflow at t={t / scale:g} in chart {chart}")
    traj = _Partial(times, charts, coords, derivs, ends, tol, f, scale).freeze(switches)
    return traj, result


class _Partial:
    """Read access to a trajectory while it is being built (used by event callbacks)."""

    def __init__(self, times, charts, coords, derivs, ends, tol, f, scale):
        self.args = (times, charts, coords, derivs, ends, tol, f, scale)

    def freeze(self, switches=()):
        times, charts, coords, derivs, ends, tol, f, scale = self.args
        return Trajectory(np.array(times) / scale, tuple(charts), tuple(coords), tuple(derivs),
                          tuple(ends), tol, f, scale, tuple(switches))


def integrate(f: VectorField, p0: ChartPoint, t_final: float, tol: float = 1e-10, h_max=DEFAULT_HMAX) -> Trajectory:
    """Flow p0 for time t_final (negative for backward flow)."""
    return _run(f, p0, t_final, tol, h_max)[0]


def flow_to(f, p0, t, tol=1e-10, h_max=DEFAULT_HMAX) -> ChartPoint:
    return integrate(f, p0, t, tol, h_max).end


# ---- winding ---------------------------------------------------------------

def observable_values(traj: Trajectory, name: str):
    period, per_chart = OBSERVABLES[name]
    vals = []
    for ch, c in zip(traj.charts, traj.coords):
        if ch not in per_chart:
            raise DomainError(f"observable {name} is not defined on chart {ch}")
        vals.append(per_chart[ch](c))
    return np.array(vals), period


def winding_phase(traj: Trajectory, name: str) -> float:
    """Accumulated unwrapped change of the observable, in turns."""
    vals, period = observable_values(traj, name)
    if len(vals) < 2:
        return 0.0
    return float(np.sum(wrap_signed(np.diff(vals), period)) / period)


def winding_count(traj: Trajectory, name: str) -> int:
    """Signed number of complete turns of an observable along the trajectory."""
    turns = winding_phase(traj, name)
    near = round(turns)
    if abs(turns - near) < 1e-6:
        return int(near)
    return int(np.trunc(turns))


# ---- periods ---------------------------------------------------------------

@dataclass(frozen=True)
class PeriodReport:
    period: float
    closure_defect: float
    winding: dict
    n_steps: int
    status: str = "closed"


def _coords_in(chart, ch, c):
    if ch == chart:
        return np.asarray(c)
    return ATLAS.convert_coords(ch, c, chart)


def minimal_period(f: VectorField, p0: ChartPoint, guess: float, tol: float = 1e-10,
                   closure_tol=None, h_max=DEFAULT_HMAX) -> PeriodReport:
    """Smallest positive return time of the orbit through p0."""
    if closure_tol is None:
        closure_tol = 10 * tol
    traj = integrate(f, p0, 2.0 * guess, tol, h_max)
    home = ATLAS.chart(p0.chart)
    start = np.array(p0.coords)

    def dist2_and_slope(t):
        ch, c = traj.state_at(t)
        base = traj.field.base if isinstance(traj.field, ReparametrizedField) else traj.field
        cc = _coords_in(p0.chart, ch, c)
        vel = base.eval(p0.chart, cc) * traj.time_scale
        d = home.difference(cc, start)
        return float(d @ d), float(d @ vel)

    ts, dists = [], []
    for t, ch, c in zip(traj.times, traj.charts, traj.coords):
        try:
            dists.append(home.distance(_coords_in(p0.chart, ch, c), start))
        except (OverlapError, ZeroDivisionError, FloatingPointError):
            dists.append(np.inf)
        ts.append(t)
    ts, dists = np.array(ts), np.array(dists)
    for i in range(1, len(ts) - 1):
        if ts[i] < 0.5 * guess or not (dists[i] <= dists[i - 1] and dists[i] <= dists[i + 1]):
            continue
        a, b = ts[i - 1], ts[i + 1]
        sa, sb = dist2_and_slope(a)[1], dist2_and_slope(b)[1]
        if sa < 0 < sb:
            T = brentq(lambda t: dist2_and_slope(t)[1], a, b, xtol=1e-15, rtol=1e-15, maxiter=200)
        else:
            T = ts[i]
        defect = float(np.sqrt(dist2_and_slope(T)[0]))
        if defect < closure_tol:
            piece = traj.truncated(T)
            return PeriodReport(float(T), defect, piece.winding, piece.n_steps)
    raise NotClosed(f"no return to the start within {2 * guess:g} (closest approach {np.min(dists[ts >= 0.5 * guess]):.3g})")


# ---- sections and return maps ---------------------------------------------

@dataclass(frozen=True)
class Section:
    """Zero set of per-chart functions g, with a transversality functional.

    ``transversality(chart, coords, v)`` receives the field value v in that chart.
    Only crossings where the functional has the sign ``orientation`` count.
    ``jump`` separates genuine sign changes of g from branch jumps.
    """

    g: Mapping[str, Callable]
    transversality: Callable
    orientation: int = 1
    jump: float = np.pi / 2
    threshold: float = 1e-3
    name: str = ""
    sampler: Callable | None = None

    def value(self, chart, c):
        if chart in self.g:
            return float(self.g[chart](c))
        for ch in self.g:
            try:
                return float(self.g[ch](ATLAS.convert_coords(chart, c, ch)))
            except (OverlapError, ZeroDivisionError, FloatingPointError):
                continue
        raise DomainError(f"section {self.name} cannot be evaluated from chart {chart}")

    def __call__(self, p: ChartPoint):
        return self.value(p.chart, p.array)

    def transversality_at(self, chart, c, f: VectorField):
        base = f.base if isinstance(f, ReparametrizedField) else f
        scale = 1.0
        if isinstance(f, ReparametrizedField):
            scale = f.factor(ChartPoint(chart, tuple(c)))
        return scale * float(self.transversality(chart, np.asarray(c), base.eval(chart, c)))

    def sample(self, rng, n):
        if self.sampler is None:
            raise NotImplementedError(f"section {self.name} has no sampler")
        return self.sampler(rng, n)


def _crossing_event(s, base, g_start, skip_start, on_cross):
    """Event callback locating oriented crossings of s inside accepted steps."""
    state = {"g": g_start, "first": True}

    def event(prev, cur, i, partial):
        t0, y0, f0, ch = prev
        t1, y1, f1, ch1 = cur
        g0 = state["g"]
        g1 = s.value(ch1, y1)
        state["g"] = g1
        first = state["first"]
        state["first"] = False
        if first and skip_start:
            return None
        crossed = (g0 > 0.0 >= g1) or (g0 < 0.0 <= g1)
        if not crossed or abs(g1 - g0) > s.jump:
            return None

        def gt(tau):
            yy, _, _ = _dp_step(base.evaluators[ch], y0, f0, tau - t0)
            return s.value(ch, yy)

        if g1 == 0.0:
            tc = t1
        else:
            tc = brentq(gt, min(t0, t1), max(t0, t1), xtol=1e-15, rtol=1e-15, maxiter=200)
        yc, _, _ = _dp_step(base.evaluators[ch], y0, f0, tc - t0)
        tr = float(s.transversality(ch, yc, base.eval(ch, yc)))
        if abs(tr) < s.threshold:
            raise TangentialCrossing(f"field nearly tangent to {s.name} at {tuple(yc)}")
        if np.sign(tr) != s.orientation:
            return None
        return on_cross(ch, yc, tc)

    return event


def _base(f):
    return f.base if isinstance(f, ReparametrizedField) else f


def _crossing_search(f, s, p, tol, t_max, skip_start, h_max):
    """Integrate until the first oriented crossing of s; returns (point, time)."""
    event = _crossing_event(s, _base(f), s.value(p.chart, p.array), skip_start, lambda ch, yc, tc: (ch, yc, tc))
    traj, res = _run(f, p, t_max, tol, h_max, event=event)
    if res is None:
        raise NoReturn(f"no crossing of {s.name} within time {t_max:g}")
    ch, yc, tc = res
    return ChartPoint(ch, tuple(yc)), tc / traj.time_scale


def crossing_times(f: VectorField, s: Section, p: ChartPoint, t_final: float, tol: float = 1e-10,
                   h_max=DEFAULT_HMAX, skip_start=True):
    """Times of all oriented crossings of s along the orbit of p in (0, t_final]."""
    found = []

    def record(ch, yc, tc):
        found.append(tc)
        return None

    event = _crossing_event(s, _base(f), s.value(p.chart, p.array), skip_start, record)
    traj, _ = _run(f, p, t_final, tol, h_max, event=event)
    return [t / traj.time_scale for t in found]


def return_map(f: VectorField, s: Section, p: ChartPoint, tol: float = 1e-10,
               t_max: float = DEFAULT_TMAX, h_max=DEFAULT_HMAX):
    """First return of p (on s) to s with the section's orientation; returns (point, time)."""
    tr = s.transversality_at(p.chart, p.array, f) if p.chart in f.evaluators else None
    if tr is None:
        q = p.to(next(iter(c for c in f.evaluators if c in s.g)))
        tr = s.transversality_at(q.chart, q.array, f)
    if abs(tr) < s.threshold:
        raise TangentialCrossing(f"field tangent to {s.name} at the start point")
    return _crossing_search(f, s, p, tol, t_max, True, h_max)


def next_crossing(f, s, p, tol=1e-10, t_max=DEFAULT_TMAX, backward=False, h_max=DEFAULT_HMAX):
    """First oriented crossing of s along the orbit of p (forward or backward in time).

    A point already on the section counts as its own crossing at time 0.
    """
    if abs(s.value(p.chart, p.array)) <= tol:
        return p, 0.0
    q, t = _crossing_search(f, s, p, tol, -t_max if backward else t_max, False, h_max)
    return q, t


# ---- csv -------------------------------------------------------------------

def write_trajectory_csv(traj: Trajectory, path):
    n = max(len(c) for c in traj.coords)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "chart"] + [f"c{i + 1}" for i in range(n)])
        for t, ch, c in zip(traj.times, traj.charts, traj.coords):
            cc = ATLAS.chart(ch).canonical(c)
            w.writerow([repr(float(t)), ch] + [repr(float(v)) for v in cc])
