"""Blow-up of the solid torus along its core circle, and integer invariants of the bundle.

Lifted fields live on the blow-up charts

    blowup-xu  (x, u, phi),  y = x u
    blowup-vy  (v, y, phi),  x = y v

and extend across the divisor {x = 0} (resp. {y = 0}).  For the linear model
with Euler number E the lift is x' = E x u, u' = -E (1 + u^2), phi' = 1, so on
the divisor u runs once around RP^1 every pi/E while phi turns once every 2 pi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Ambiguous, JacobianUnavailable, NotClosed, TooClose, UndersampledError
from .flow import ReparametrizedField, Section, Trajectory, VectorField, register_observable
from .geometry import ATLAS, TWO_PI, ChartPoint, solid_torus_embedding, wrap_signed

# below this |x| the lifted u-component uses the first-order limit on the core circle
DIVISOR_BAND = 1e-8


# ---- observables -----------------------------------------------------------
# "u_rp1" is the slope angle on RP^1 (period pi), oriented so that orbits near
# the core circle turn positively: clockwise in w for the linear model, counter
# clockwise in (y1, y2) for the Hopf field in stereographic coordinates.

register_observable("u_rp1", np.pi, {
    "blowup-xu": lambda c: -np.arctan(c[1]),
    "blowup-vy": lambda c: np.arctan(c[0]) - np.pi / 2,
    "local-torus": lambda c: -np.arctan2(c[1], c[0]),
    "stereoN-xu": lambda c: np.arctan(c[1]),
    "stereoS-xu": lambda c: np.arctan(c[1]),
    "stereoN-vy": lambda c: np.pi / 2 - np.arctan(c[0]),
    "stereoS-vy": lambda c: np.pi / 2 - np.arctan(c[0]),
    "stereo-N": lambda c: np.arctan2(c[1], c[0]),
    "stereo-S": lambda c: np.arctan2(c[1], c[0]),
})
# along the divisor of the stereographic blow-up, 2 arctan(y3) is the fiber angle
register_observable("phi", TWO_PI, {
    "stereoN-xu": lambda c: 2 * np.arctan(c[2]),
    "stereoN-vy": lambda c: 2 * np.arctan(c[2]),
    "stereoS-xu": lambda c: np.pi - 2 * np.arctan(c[2]),
    "stereoS-vy": lambda c: np.pi - 2 * np.arctan(c[2]),
})


# ---- lifted fields ---------------------------------------------------------

@dataclass(frozen=True)
class LiftedField(VectorField):
    base: VectorField = None
    E: int = 0


def _model_jacobian(E):
    return np.array([[0.0, E, 0.0], [-E, 0.0, 0.0], [0.0, 0.0, 0.0]])


def _core_jacobian(f: VectorField):
    if f.jac_on_curve is not None:
        return f.jac_on_curve
    if "local-torus" not in f.evaluators:
        raise JacobianUnavailable(f"{f.name} has no Jacobian on the core circle")
    ev = f.evaluators["local-torus"]

    def jac(phi, h=1e-5):
        out = np.empty((3, 3))
        base = np.array([0.0, 0.0, phi])
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            out[:, j] = (ev(base + e) - ev(base - e)) / (2 * h)
        return out

    return jac


def lift_field(f: VectorField, E: int) -> LiftedField:
    """Lift a field on the solid torus (equal to the linear model to first order on the core) to the blow-up."""
    if "local-torus" not in f.evaluators:
        raise JacobianUnavailable("lift_field needs the field in the local-torus chart")
    base_ev = f.evaluators["local-torus"]
    E = int(E)
    J0 = _model_jacobian(E)
    jac = _core_jacobian(f)

    def perturbation_jac(phi):
        return jac(phi) - J0

    def ev_xu(c):
        x, u, phi = c
        v = base_ev(np.array([x, x * u, phi]))
        if abs(x) >= DIVISOR_BAND:
            return np.array([v[0], (v[1] - u * v[0]) / x, v[2]])
        G = perturbation_jac(phi)
        lim = G[1, 0] + u * G[1, 1] - u * (G[0, 0] + u * G[0, 1])
        xdot = v[0] if x != 0.0 else 0.0
        return np.array([xdot, -E * (1.0 + u * u) + lim, v[2]])

    def ev_vy(c):
        w, y, phi = c
        v = base_ev(np.array([y * w, y, phi]))
        if abs(y) >= DIVISOR_BAND:
            return np.array([(v[0] - w * v[1]) / y, v[1], v[2]])
        G = perturbation_jac(phi)
        lim = w * G[0, 0] + G[0, 1] - w * (w * G[1, 0] + G[1, 1])
        ydot = v[1] if y != 0.0 else 0.0
        return np.array([E * (1.0 + w * w) + lim, ydot, v[2]])

    return LiftedField({"blowup-xu": ev_xu, "blowup-vy": ev_vy, "local-torus": base_ev},
                       jac_on_curve=f.jac_on_curve, name=f"lift({f.name})", base=f, E=E)


def divisor_field(E: int) -> VectorField:
    """x' = 0, u' = -E (1 + u^2), phi' = 1 on the divisor, in both blow-up charts."""
    E = int(E)

    def ev_xu(c):
        return np.array([0.0, -E * (1.0 + c[1] ** 2), 1.0])

    def ev_vy(c):
        return np.array([E * (1.0 + c[0] ** 2), 0.0, 1.0])

    return VectorField({"blowup-xu": ev_xu, "blowup-vy": ev_vy}, name=f"divisor(E={E})")


def hopf_lifted_field() -> LiftedField:
    """The Hopf field in the four blow-up charts of the two stereographic charts (blown up along the y3 axis)."""

    def n_xu(c):
        y1, u, y3 = c
        return np.array([y1 * (y3 - u), 1.0 + u * u, 0.5 * (1.0 + y3 * y3 - y1 * y1 * (1.0 + u * u))])

    def n_vy(c):
        v, y2, y3 = c
        return np.array([-(1.0 + v * v), y2 * (v + y3), 0.5 * (1.0 + y3 * y3 - y2 * y2 * (1.0 + v * v))])

    def s_xu(c):
        y1, u, y3 = c
        return np.array([-y1 * (y3 + u), 1.0 + u * u, -0.5 * (1.0 + y3 * y3 - y1 * y1 * (1.0 + u * u))])

    def s_vy(c):
        v, y2, y3 = c
        return np.array([-(1.0 + v * v), y2 * (v - y3), -0.5 * (1.0 + y3 * y3 - y2 * y2 * (1.0 + v * v))])

    return LiftedField({"stereoN-xu": n_xu, "stereoN-vy": n_vy, "stereoS-xu": s_xu, "stereoS-vy": s_vy},
                       name="hopf-lift", E=1)


# ---- section and transversality form -------------------------------------

@dataclass(frozen=True)
class TransversalityForm:
    """eta = a dphi + b d(arctan u), written per chart.

    The default (a, b) = (0, 1/E) gives eta(lifted model) = -1 identically.
    In the stereographic blow-up the slope u turns the other way, so there
    b = -1 and a is unused.
    """

    E: int
    dphi: float = 0.0
    darctan: float | None = None
    stereo: bool = False

    @property
    def b(self):
        if self.darctan is not None:
            return self.darctan
        return -1.0 if self.stereo else 1.0 / self.E

    def __call__(self, chart, c, v):
        """Value of the form on tangent vector v at coords c in the given chart."""
        b = self.b
        if chart in ("blowup-xu", "stereoN-xu", "stereoS-xu"):
            da = v[1] / (1.0 + c[1] ** 2)
        elif chart in ("blowup-vy", "stereoN-vy", "stereoS-vy"):
            da = -v[0] / (1.0 + c[0] ** 2)
        elif chart in ("local-torus", "stereo-N", "stereo-S"):
            x, y = c[0], c[1]
            da = (x * v[1] - y * v[0]) / (x * x + y * y)
        else:
            raise ValueError(f"no transversality form on chart {chart}")
        dphi = v[2] if chart in ("blowup-xu", "blowup-vy", "local-torus") else 0.0
        return self.dphi * dphi + b * da


def transversality(form: TransversalityForm, f: VectorField, p: ChartPoint) -> float:
    base = f.base if isinstance(f, ReparametrizedField) else f
    scale = f.factor(p) if isinstance(f, ReparametrizedField) else 1.0
    return scale * float(form(p.chart, p.array, base(p)))


def _slope_angle(chart, c):
    """arctan u as a point of R/pi Z (u the blow-up slope)."""
    if chart in ("blowup-xu", "stereoN-xu", "stereoS-xu"):
        return np.arctan(c[1])
    if chart in ("blowup-vy", "stereoN-vy", "stereoS-vy"):
        return np.pi / 2 - np.arctan(c[0])
    return np.arctan2(c[1], c[0])


_SECTION_CHARTS = {
    False: ("blowup-xu", "blowup-vy", "local-torus"),
    True: ("stereoN-xu", "stereoN-vy", "stereoS-xu", "stereoS-vy", "stereo-N", "stereo-S"),
}


def strict_transform_section(E: int, c: float = 0.0, stereo: bool = False, r: float = 0.5) -> Section:
    """Strict transform of the half-plane pair {arg w = c mod pi}: the surface {arctan u = c mod pi}.

    Crossed 2|E| times per period by every lifted orbit, always with the same
    orientation; the transversality form is :class:`TransversalityForm`.
    """
    form = TransversalityForm(int(E), stereo=stereo)
    charts = _SECTION_CHARTS[stereo]

    def g_for(ch):
        return lambda cc: float(wrap_signed(_slope_angle(ch, cc) - c, np.pi))

    def sampler(rng, n):
        pts = []
        for _ in range(n):
            if stereo:
                rad = rng.uniform(-2.0, 2.0)
                y3 = rng.uniform(-3.0, 3.0)
                pts.append(ChartPoint("stereoN-xu", (rad, np.tan(c), y3)))
            else:
                rad = rng.uniform(-0.9 * r, 0.9 * r)
                phi = rng.uniform(0.0, TWO_PI)
                if abs(np.cos(c)) >= 0.5:
                    pts.append(ChartPoint("blowup-xu", (rad * np.cos(c), np.tan(c), phi)))
                else:
                    pts.append(ChartPoint("blowup-vy", (1.0 / np.tan(c), rad * np.sin(c), phi)))
        return pts

    return Section({ch: g_for(ch) for ch in charts}, form, orientation=-1, jump=np.pi / 2,
                   name=f"strict-transform(E={E}, c={c:g})", sampler=sampler)


def fiber_section(c: float = 0.0, r: float = 0.5) -> Section:
    """{phi = c}: crossed once per period by every orbit near the core, including the divisor."""

    def g(cc):
        return float(wrap_signed(cc[2] - c))

    def trans(ch, cc, v):
        return float(v[2])

    def sampler(rng, n):
        pts = []
        for _ in range(n):
            rad = rng.uniform(0.0, 0.9 * r)
            a = rng.uniform(0.0, TWO_PI)
            pts.append(ChartPoint("local-torus", (rad * np.cos(a), rad * np.sin(a), c)))
        return pts

    return Section({ch: g for ch in ("local-torus", "blowup-xu", "blowup-vy")}, trans, orientation=1,
                   jump=np.pi, name=f"fiber(c={c:g})", sampler=sampler)


# ---- integer invariants ----------------------------------------------------

def space_curve(traj: Trajectory, n: int):
    """n points of the trajectory as a curve in R^3 (stereo-N picture or standard solid torus)."""
    _, pts = traj.resample(n)
    out = np.empty((n, 3))
    for k, (ch, c) in enumerate(pts):
        if ch in ("local-torus", "blowup-xu", "blowup-vy"):
            lt = ATLAS.convert_coords(ch, c, "local-torus")
            out[k] = solid_torus_embedding(lt)[0]
        else:
            out[k] = ATLAS.convert_coords(ch, c, "stereo-N")
    return out


def gauss_linking(a: np.ndarray, b: np.ndarray) -> float:
    """Gauss double integral over two closed polylines, midpoint rule on segments."""
    da = np.roll(a, -1, axis=0) - a
    db = np.roll(b, -1, axis=0) - b
    ma = a + 0.5 * da
    mb = b + 0.5 * db
    r = ma[:, None, :] - mb[None, :, :]
    cross = np.cross(da[:, None, :], db[None, :, :])
    num = np.einsum("ijk,ijk->ij", r, cross)
    den = np.linalg.norm(r, axis=2) ** 3
    return float(np.sum(num / den) / (4 * np.pi))


def linking_number(c1: Trajectory, c2: Trajectory, closure_tol=1e-6, min_distance=1e-3,
                   n0=64, n_max=8192, refine_tol=1e-3) -> int:
    """Linking number of two closed orbits."""
    curves = []
    for c in (c1, c2):
        probe = space_curve(c, 2)
        if np.linalg.norm(probe[0] - probe[-1]) > closure_tol:
            raise NotClosed("linking number needs closed curves")
    n = n0
    prev = None
    while True:
        curves = [space_curve(c, n + 1)[:-1] for c in (c1, c2)]
        d = np.min(np.linalg.norm(curves[0][:, None, :] - curves[1][None, :, :], axis=2))
        if d < min_distance:
            raise TooClose(f"curves come within {d:.2e}")
        val = gauss_linking(*curves)
        if prev is not None and abs(val - prev) < refine_tol:
            break
        if 2 * n > n_max:
            break
        prev = val
        n *= 2
    k = int(round(val))
    if abs(val - k) > 0.2:
        raise Ambiguous(f"linking integral {val:.4f} is not near an integer")
    return k


def transition_degree(E: int, n_samples: int = 64) -> int:
    """Winding number of theta -> (w/|w|)^E on the unit circle, by unwrapped phase."""
    if n_samples < 8 * abs(E) or n_samples < 2:
        raise UndersampledError(f"{n_samples} samples cannot resolve degree {E}")
    theta = np.linspace(0.0, TWO_PI, n_samples + 1)
    g = np.exp(1j * E * theta)
    turns = np.sum(wrap_signed(np.diff(np.angle(g)))) / TWO_PI
    return int(round(turns))
