"""Period function, isochronization, return-map periodicity and the conjugacy to the model.

Conjugacies use a section crossed exactly once per period (by default
``fiber_section``), so that the time since the last crossing is additive
along orbits modulo 2 pi.  The strict-transform section, crossed 2E times per
period, drives the period function and the periodicity check of the return map.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NotPeriodic, PeriodicityViolation
from .flow import (ReparametrizedField, Section, VectorField, flow_to, integrate, next_crossing,
                   return_map, scaled_field)
from .geometry import ATLAS, TWO_PI, ChartPoint

DEFAULT_TOL = 1e-10


def chart_distance(p: ChartPoint, q: ChartPoint) -> float:
    """Distance measured in p's chart (q converted there first)."""
    qc = ATLAS.convert_coords(q.chart, q.array, p.chart)
    return ATLAS.chart(p.chart).distance(qc, p.array)


# ---- period function -------------------------------------------------------

@dataclass(frozen=True)
class PeriodFunction:
    """T(p): sum of 2|E| successive return times to s, starting from the first crossing after p."""

    E: int
    field: VectorField
    section: Section
    tol: float = DEFAULT_TOL

    def return_times(self, p: ChartPoint):
        q, _ = next_crossing(self.field, self.section, p, self.tol)
        times = []
        for _ in range(2 * abs(self.E)):
            q, t = return_map(self.field, self.section, q, self.tol)
            times.append(t)
        return times

    def __call__(self, p: ChartPoint) -> float:
        return float(np.sum(self.return_times(p)))


def period_function(f: VectorField, s: Section, E: int, tol=DEFAULT_TOL) -> PeriodFunction:
    if E == 0:
        raise ValueError("E must be nonzero")
    return PeriodFunction(int(E), f, s, tol)


def isochronize(f: VectorField, T: Callable) -> ReparametrizedField:
    """(T / 2 pi) f, for a period function T that is constant along orbits.

    Speeding an orbit of period T up by T / 2 pi brings its period to 2 pi.
    """
    return scaled_field(f, lambda p: T(p) / TWO_PI, name=f"iso({f.name})")


# ---- periodicity of the return map ----------------------------------------

def montgomery_check(f: VectorField, s: Section, E: int, n_points: int = 50, rng=None, tol=DEFAULT_TOL,
                     identity_tol=1e-6, move_threshold=1e-2, strict=True):
    """Check P^(2E) = Id and P^k != Id for 0 < k < 2E on random section points."""
    rng = rng if rng is not None else np.random.default_rng(0)
    N = 2 * abs(int(E))
    pts = s.sample(rng, n_points)
    disp = np.zeros((n_points, N))
    for i, p in enumerate(pts):
        q = p
        for k in range(N):
            q, _ = return_map(f, s, q, tol)
            disp[i, k] = chart_distance(p, q)
    closing = float(np.max(disp[:, -1]))
    per_k_max = disp[:, :-1].max(axis=0) if N > 1 else np.array([])
    min_moved = float(per_k_max.min()) if N > 1 else np.inf
    ok = closing < identity_tol and min_moved > move_threshold
    report = {
        "E": int(E), "n_points": n_points, "max_closing_displacement": closing,
        "min_over_k_of_max_displacement": min_moved, "identity_tol": identity_tol,
        "move_threshold": move_threshold, "pass": bool(ok),
    }
    if strict and not ok:
        i = int(np.argmax(disp[:, -1])) if closing >= identity_tol else int(np.argmin(disp[:, :-1].max(axis=1)))
        raise PeriodicityViolation(f"return map periodicity failed: {report}", point=pts[i])
    return report


# ---- conjugacy -------------------------------------------------------------

@dataclass(frozen=True)
class ConjugacyMap:
    """p -> flow of f0 for time tau(p) applied to p(eps), the last crossing of s before p."""

    f_eps: VectorField
    f0: VectorField
    section: Section
    tol: float = DEFAULT_TOL
    epsilon: float | None = None

    def base_point(self, p: ChartPoint):
        """(p(eps), tau) with tau in [0, 2 pi)."""
        q, t = next_crossing(self.f_eps, self.section, p, self.tol, backward=True)
        tau = -t
        if tau >= TWO_PI:
            tau -= TWO_PI
        return q, tau

    def __call__(self, p: ChartPoint) -> ChartPoint:
        q, tau = self.base_point(p)
        if tau == 0.0:
            return q
        return flow_to(self.f0, q, tau, self.tol)


def build_conjugacy(f_eps: VectorField, f0: VectorField, s: Section, tol=DEFAULT_TOL, epsilon=None) -> ConjugacyMap:
    return ConjugacyMap(f_eps, f0, s, tol, epsilon)


def conjugacy_residuals(c: ConjugacyMap, points, times):
    """|phi(flow_eps^t p) - flow_0^t phi(p)| for every p and every t (grid)."""
    res = []
    for p in points:
        img = c(p)
        traj0 = integrate(c.f0, img, max(times), c.tol) if max(times) > 0 else None
        traj_e = integrate(c.f_eps, p, max(times), c.tol) if max(times) > 0 else None
        for t in times:
            if t == 0:
                res.append(0.0)
                continue
            lhs = c(traj_e.point_at(t))
            rhs = traj0.point_at(t)
            res.append(chart_distance(rhs, lhs))
    return np.array(res)


def equivariance_check(c: ConjugacyMap, n: int, sampler: Callable, rng=None) -> float:
    """Max over n random (theta, p) of |phi(theta *eps p) - theta *0 phi(p)|."""
    rng = rng if rng is not None else np.random.default_rng(0)
    pts = sampler(rng, n)
    worst = 0.0
    for p in pts:
        theta = rng.uniform(0.0, TWO_PI)
        worst = max(worst, float(conjugacy_residuals(c, [p], [theta]).max()))
    return worst


def return_time_cocycle(c: ConjugacyMap, p: ChartPoint, theta: float) -> float:
    """tau(flow^theta p) - tau(p) - theta reduced to (-pi, pi]."""
    _, tau0 = c.base_point(p)
    _, tau1 = c.base_point(flow_to(c.f_eps, p, theta, c.tol))
    d = (tau1 - tau0 - theta) % TWO_PI
    return float(d - TWO_PI if d > np.pi else d)


# ---- Bochner averaging and suspension -------------------------------------

def rotation(l: int):
    mult = np.exp(2j * np.pi / l)
    return lambda w: mult * w


@dataclass(frozen=True)
class BochnerConjugacy:
    """zeta = (1/|l|) sum_k R^{-k} P^k, which satisfies zeta o P = R o zeta when P^|l| = Id."""

    P: Callable
    l: int

    def __call__(self, w):
        w = np.asarray(w, dtype=complex)
        L = abs(self.l)
        inv = np.exp(-2j * np.pi / self.l)
        acc = np.zeros_like(w)
        q = w
        for k in range(L):
            acc = acc + inv**k * q
            q = self.P(q)
        return acc / L

    def jacobian_det(self, w, h=1e-6):
        w = complex(w)
        dx = (self(w + h) - self(w - h)) / (2 * h)
        dy = (self(w + 1j * h) - self(w - 1j * h)) / (2 * h)
        return float(dx.real * dy.imag - dx.imag * dy.real)


def polar_samples(r_max, nr=32, ntheta=32):
    r = np.linspace(r_max / nr, r_max, nr)
    th = np.linspace(0.0, TWO_PI, ntheta, endpoint=False)
    R, TH = np.meshgrid(r, th, indexing="ij")
    return (R * np.exp(1j * TH)).ravel()


def tabulate_polar(P: Callable, r_max: float, nr: int = 64, ntheta: int = 128) -> Callable:
    """Interpolated stand-in for an expensive disc map, tabulated on a polar grid (bicubic splines)."""
    from scipy.interpolate import RectBivariateSpline

    r = np.linspace(0.0, r_max, nr)
    # pad the angle axis by three cells each side so the splines see the periodic wrap
    th = np.linspace(-TWO_PI * 3 / ntheta, TWO_PI * (1 + 3 / ntheta), ntheta + 7)
    R, TH = np.meshgrid(r, th, indexing="ij")
    vals = np.asarray(P(R * np.exp(1j * TH)))
    re = RectBivariateSpline(r, th, vals.real, kx=3, ky=3, s=0)
    im = RectBivariateSpline(r, th, vals.imag, kx=3, ky=3, s=0)

    def interp(w):
        w = np.asarray(w, dtype=complex)
        rad, ang = np.abs(w).ravel(), np.mod(np.angle(w), TWO_PI).ravel()
        return (re.ev(rad, ang) + 1j * im.ev(rad, ang)).reshape(w.shape)

    return interp


def bochner_linearize(P: Callable, l: int, samples=None, r_max=0.5, periodic_tol=1e-6) -> BochnerConjugacy:
    """Average the iterates of a periodic disc map fixing 0 to conjugate it to rotation by 2 pi / l."""
    if l == 0:
        raise ValueError("l must be nonzero")
    samples = polar_samples(r_max, 8, 16) if samples is None else np.asarray(samples, dtype=complex)
    if abs(complex(P(np.array([0j]))[0])) > periodic_tol:
        raise NotPeriodic("the map does not fix the origin")
    q = samples
    for _ in range(abs(l)):
        q = P(q)
    err = float(np.max(np.abs(q - samples)))
    if err > periodic_tol:
        raise NotPeriodic(f"P^{abs(l)} differs from the identity by {err:.3g}")
    return BochnerConjugacy(P, int(l))


def linear_model(l: int) -> VectorField:
    """w' = (i / l) w, phi' = 1: its time-2pi map on {phi = 0} is rotation by 2 pi / l."""
    om = 1.0 / l

    def ev(c):
        return np.array([-om * c[1], om * c[0], 1.0])

    return VectorField({"local-torus": ev}, name=f"linear(l={l})")


def linear_flow(l: int, p: ChartPoint, t: float) -> ChartPoint:
    x, y, phi = p.coords
    w = (x + 1j * y) * np.exp(1j * t / l)
    return ChartPoint("local-torus", (w.real, w.imag, phi + t))


@dataclass(frozen=True)
class Suspension:
    """eta = flow_L^tau o zeta o flow_X^{-tau}, tau the time since the last crossing of {phi = 0}."""

    zeta: Callable
    field: VectorField
    l: int
    section: Section
    tol: float = DEFAULT_TOL

    def __call__(self, p: ChartPoint) -> ChartPoint:
        q, t = next_crossing(self.field, self.section, p, self.tol, backward=True)
        tau = -t
        q = q.to("local-torus")
        w = complex(self.zeta(np.array([q.coords[0] + 1j * q.coords[1]]))[0])
        base = ChartPoint("local-torus", (w.real, w.imag, q.coords[2]))
        return linear_flow(self.l, base, tau)


def suspend_conjugacy(zeta: Callable, f: VectorField, l: int, section: Section | None = None,
                      tol=DEFAULT_TOL) -> Suspension:
    from .blowup import fiber_section

    return Suspension(zeta, f, int(l), section or fiber_section(0.0), tol)


def suspension_residuals(eta: Suspension, points, times):
    res = []
    for p in points:
        img = eta(p)
        traj = integrate(eta.field, p, max(times), eta.tol)
        for t in times:
            lhs = linear_flow(eta.l, img, t)
            rhs = eta(traj.point_at(t))
            res.append(chart_distance(lhs, rhs))
    return np.array(res)


# ---- explicit conjugated suspensions (test fixtures and experiments) ------

@dataclass(frozen=True)
class DiscShear:
    """h(w, phi) = s2(s1(w)) with s1: x += a(phi) y^2 and s2: y += b(phi) x^2; explicit inverse."""

    size: float = 0.05
    phase_mod: float = 0.5

    def coeffs(self, phi):
        a = self.size * (1.0 + self.phase_mod * np.cos(phi))
        b = self.size * (1.0 - self.phase_mod * np.sin(phi))
        da = -self.size * self.phase_mod * np.sin(phi)
        db = -self.size * self.phase_mod * np.cos(phi)
        return a, b, da, db

    def forward(self, x, y, phi):
        a, b, _, _ = self.coeffs(phi)
        x1 = x + a * y * y
        return x1, y + b * x1 * x1

    def inverse(self, x, y, phi):
        a, b, _, _ = self.coeffs(phi)
        y0 = y - b * x * x
        return x - a * y0 * y0, y0

    def disc_map(self, w, phi=0.0):
        x, y = self.forward(np.real(w), np.imag(w), phi)
        return x + 1j * y

    def disc_inverse(self, w, phi=0.0):
        x, y = self.inverse(np.real(w), np.imag(w), phi)
        return x + 1j * y

    def jacobian(self, x, y, phi):
        a, b, da, db = self.coeffs(phi)
        x1 = x + a * y * y
        J1 = np.array([[1.0, 2 * a * y, da * y * y], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        J2 = np.array([[1.0, 0.0, 0.0], [2 * b * x1, 1.0, db * x1 * x1], [0.0, 0.0, 1.0]])
        return J2 @ J1


def conjugated_linear_field(l: int, shear: DiscShear) -> VectorField:
    """h_* X_L for X_L the linear model: all orbits closed, return map on {phi = 0} = h0 R h0^{-1}."""
    om = 1.0 / l

    def ev(c):
        x0, y0 = shear.inverse(c[0], c[1], c[2])
        v = np.array([-om * y0, om * x0, 1.0])
        return shear.jacobian(x0, y0, c[2]) @ v

    return VectorField({"local-torus": ev}, name=f"conjugated-linear(l={l})")


def conjugated_rotation(l: int, shear: DiscShear):
    """h0 o R_l o h0^{-1} on the disc."""
    R = rotation(l)
    return lambda w: shear.disc_map(R(shear.disc_inverse(w)))


def numerical_return_map(f: VectorField, tol=DEFAULT_TOL):
    """Time-2pi map of f restricted to {phi = 0}, evaluated by integration (for fields with phi' = 1)."""

    def P(w):
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        out = np.empty_like(w)
        for k, z in enumerate(w.ravel()):
            q = flow_to(f, ChartPoint("local-torus", (z.real, z.imag, 0.0)), TWO_PI, tol)
            out.ravel()[k] = q.coords[0] + 1j * q.coords[1]
        return out

    return P
