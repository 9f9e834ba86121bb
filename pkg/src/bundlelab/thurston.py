"""A family of flows on a fiber product of the unit tangent bundle of T^2 and the Heisenberg nilmanifold.

Coordinates on the fiber-product chart are (zx, zy, beta, xu): the base point
z = zx + i zy in the universal cover of T^2 = C / (2 pi Z)^2, the unit direction
zeta = exp(i beta), and the fiber coordinate xu of the Heisenberg factor.  The
Heisenberg point is (a, b, c) = (zx, zy, -xu / 2 pi) / 2 pi with the group law
(a, b, c)(a', b', c') = (a + a', b + b', c + c' + a b').

The drift field turns the direction at rate 1/lam, so base orbits are
counterclockwise circles of radius lam.  The fiber coordinate moves at the
constant rate alpha2 plus the connection term -alpha1 x dy, which makes the
total change of xu over one base circle 2 pi lam alpha2 / alpha1 - pi lam^2.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import ConfigError, NonReturningBase
from .flow import VectorField, integrate
from .geometry import TWO_PI, ChartPoint, circular_distance

LAMBDA_RANGE = (0.05, 20.0)
SWEEP_COLUMNS = ("lambda", "alpha1", "alpha2", "geometric_phase", "dynamical_phase", "closure_defect",
                 "k_detected")
PHASE_TOL = 1e-12


# ---- points ----------------------------------------------------------------

@dataclass(frozen=True)
class TorusPoint:
    z: complex

    def __post_init__(self):
        z = complex(self.z)
        object.__setattr__(self, "z", complex(np.mod(z.real, TWO_PI), np.mod(z.imag, TWO_PI)))


@dataclass(frozen=True)
class HeisPoint:
    a: float
    b: float
    c: float

    @classmethod
    def reduced(cls, a, b, c):
        return cls(*heis_reduce(a, b, c))

    def __mul__(self, other):
        return HeisPoint(*heis_mul((self.a, self.b, self.c), (other.a, other.b, other.c)))


def heis_mul(g, h):
    return (g[0] + h[0], g[1] + h[1], g[2] + h[2] + g[0] * h[1])


def _unit_mod(v):
    r = float(np.mod(v, 1.0))
    return 0.0 if r >= 1.0 else r


def heis_reduce(a, b, c):
    """Representative in [0, 1)^3 of the left coset of the integer Heisenberg group through (a, b, c)."""
    n = -np.floor(b)
    b = b + n
    if b >= 1.0:
        n, b = n - 1.0, b - 1.0
    m = -np.floor(a)
    a = a + m
    if a >= 1.0:
        m, a = m - 1.0, a - 1.0
    c = c + m * b
    return float(a), float(b), _unit_mod(c)


@dataclass(frozen=True)
class FiberProductPoint:
    base: TorusPoint
    zeta: complex
    heis: HeisPoint

    def __post_init__(self):
        if abs(abs(self.zeta) - 1.0) > 1e-10:
            raise ValueError(f"|zeta| = {abs(self.zeta)} is not 1")
        if self.torus_mismatch() > 1e-10:
            raise ValueError("base and Heisenberg point project to different torus points")

    def torus_mismatch(self) -> float:
        da = circular_distance(self.base.z.real / TWO_PI, self.heis.a, 1.0)
        db = circular_distance(self.base.z.imag / TWO_PI, self.heis.b, 1.0)
        return max(da, db)

    @classmethod
    def from_chart(cls, p: ChartPoint) -> "FiberProductPoint":
        zx, zy, beta, xu = p.coords
        return cls(TorusPoint(complex(zx, zy)), complex(np.exp(1j * beta)),
                   HeisPoint.reduced(zx / TWO_PI, zy / TWO_PI, -xu / TWO_PI**2))


def fiber_product_point(z=0j, zeta=1 + 0j, xu=0.0) -> ChartPoint:
    z = complex(z)
    return ChartPoint("fiber-product", (z.real, z.imag, float(np.angle(zeta)), xu))


# ---- parameters and fields --------------------------------------------------

@dataclass(frozen=True)
class ThurstonParams:
    lam: float
    alpha1: float
    alpha2: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if self.alpha1 <= 0 or self.alpha2 < 0:
            raise ConfigError(f"need alpha1 > 0 and alpha2 >= 0, got ({self.alpha1}, {self.alpha2})")

    @classmethod
    def on_profile(cls, lam, ratio_factor=1.0):
        """Profile parameters, optionally with alpha2 scaled so that alpha2/alpha1 = ratio_factor * lam / 2."""
        a1, a2 = alpha_profile(lam)
        return cls(lam, a1, a2 * ratio_factor)

    @property
    def ratio(self):
        return self.alpha2 / self.alpha1

    @property
    def base_period(self):
        return TWO_PI * self.lam / self.alpha1


def alpha_profile(lam: float):
    """(2/(2+lam), lam/(2+lam)): alpha2/alpha1 = lam/2 and alpha1 + alpha2 = 1."""
    if lam < 0:
        raise ConfigError(f"lambda must be nonnegative, got {lam}")
    if np.isinf(lam):
        return 0.0, 1.0
    return 2.0 / (2.0 + lam), lam / (2.0 + lam)


def drift_field(lam: float) -> VectorField:
    """z' = zeta, zeta' = (i/lam) zeta on the unit tangent bundle, in (zx, zy, beta) coordinates."""
    if not lam > 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    w = 1.0 / lam

    def ev(c):
        return np.array([np.cos(c[2]), np.sin(c[2]), w])

    return VectorField({"unit-tangent": ev}, name=f"drift(lam={lam:g})")


def drift_closed_form(lam, z0, zeta0, t):
    return z0 - 1j * lam * zeta0 * (np.exp(1j * t / lam) - 1.0)


def thurston_field(params: ThurstonParams) -> VectorField:
    a1, a2, w = params.alpha1, params.alpha2, 1.0 / params.lam

    def ev(c):
        dx, dy = a1 * np.cos(c[2]), a1 * np.sin(c[2])
        return np.array([dx, dy, a1 * w, a2 - c[0] * dy])

    return VectorField({"fiber-product": ev}, name=f"thurston(lam={params.lam:g})")


def direction_rotation_field() -> VectorField:
    """Rotation of the unit direction only: the marginal field at lam = 0."""
    return VectorField({"fiber-product": lambda c: np.array([0.0, 0.0, 1.0, 0.0])}, name="direction-rotation")


def central_field() -> VectorField:
    """Unit speed along the Heisenberg center only: the marginal field at lam = infinity."""
    return VectorField({"fiber-product": lambda c: np.array([0.0, 0.0, 0.0, 1.0])}, name="central")


# ---- phases and closure ------------------------------------------------------

def _one_turn(params: ThurstonParams, p0: ChartPoint, tol):
    return integrate(thurston_field(params), p0, params.base_period, tol, h_max=None)


def geometric_phase(lam: float, tol=PHASE_TOL) -> float:
    """Integral of x dy around one drift circle, accumulated in the fiber coordinate of a flow with no drift term."""
    if lam < 0:
        raise ConfigError(f"lambda must be nonnegative, got {lam}")
    if lam == 0:
        return 0.0
    traj = _one_turn(ThurstonParams(lam, 1.0, 0.0), fiber_product_point(), tol)
    return float(-(traj.end.coords[3] - traj.start.coords[3]))


def dynamical_phase(params: ThurstonParams) -> float:
    """Integral of the constant fiber drift alpha2 over one base period (by quadrature)."""
    val, _ = quad(lambda t: params.alpha2, 0.0, params.base_period)
    return float(val)


def analytic_fiber_shift(params: ThurstonParams) -> float:
    return TWO_PI * params.lam * params.ratio - np.pi * params.lam**2


def closure_defect(params: ThurstonParams, p0: ChartPoint | None = None, tol=PHASE_TOL, base_tol=1e-6):
    """(distance of the fiber shift over one base period from 2 pi Z, the nearest multiple k)."""
    p0 = p0 or fiber_product_point()
    traj = _one_turn(params, p0, tol)
    a, b = traj.start.coords, traj.end.coords
    base_err = max(abs(b[0] - a[0]), abs(b[1] - a[1]), circular_distance(b[2], a[2]))
    if base_err > base_tol:
        raise NonReturningBase(f"base did not close after one period (error {base_err:.3g})")
    shift = b[3] - a[3]
    k = int(np.round(shift / TWO_PI))
    return float(abs(shift - TWO_PI * k)), k


# ---- geometry of leaves -------------------------------------------------------

def leaf_geometry(params: ThurstonParams, n=512, tol=1e-10):
    """Base-projection diameter and fraction of arc length in the fiber direction over one base period."""
    _, states = _one_turn(params, fiber_product_point(), tol).resample(n)
    c = np.array([y for _, y in states])
    z = c[:, 0] + 1j * c[:, 1]
    diam = float(np.max(np.abs(z[:, None] - z[None, :])))
    base_speed = params.alpha1
    fiber_speed = np.abs(params.alpha2 - c[:, 0] * params.alpha1 * np.sin(c[:, 2]))
    frac = float(np.mean(fiber_speed / np.hypot(base_speed, fiber_speed)))
    return {"base_diameter": diam, "fiber_fraction": frac}


# ---- sweeps ----------------------------------------------------------------------

def sweep_row(lam: float, ratio_factor: float = 1.0, tol=PHASE_TOL):
    params = ThurstonParams.on_profile(lam, ratio_factor)
    defect, k = closure_defect(params, tol=tol)
    return {
        "lambda": lam, "alpha1": params.alpha1, "alpha2": params.alpha2,
        "geometric_phase": geometric_phase(lam, tol), "dynamical_phase": dynamical_phase(params),
        "closure_defect": defect, "k_detected": k,
    }


def sweep(lams, ratio_factor: float = 1.0, tol=PHASE_TOL):
    return [sweep_row(float(l), ratio_factor, tol) for l in sorted(lams)]


def write_sweep_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
