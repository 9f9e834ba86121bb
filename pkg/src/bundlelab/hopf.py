"""The Hopf field on S^3, the linear model around a fiber, and tangent perturbations.

The linear model lives on the solid torus chart ``local-torus`` with
coordinates (x, y, phi), w = x + iy:

    dw/dt = -i E w,   dphi/dt = 1.

Perturbations are pushforwards of the model by diffeomorphisms built from a
seed field that vanishes to second order on the core circle w = 0.  The
diffeomorphism used is the inverse of a fixed-step RK4 map of the seed flow,
so the perturbed field is an exact pushforward (every orbit stays closed) and
its value only needs a handful of seed evaluations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels as _k
from .errors import ConfigError, DomainError, SupportError
from .flow import VectorField, integrate, register_observable
from .geometry import TWO_PI, AmbientPoint, ChartPoint, wrap_angle

HOPF_MATRIX = np.array([
    [0.0, -1.0, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
    [0.0, 0.0, 1.0, 0.0],
])


def _hopf_stereo_north(c):
    y1, y2, y3 = c
    return np.array([-y2 + y1 * y3, y1 + y2 * y3, 0.5 * (1.0 + y3 * y3 - y1 * y1 - y2 * y2)])


def _hopf_stereo_south(c):
    y1, y2, y3 = c
    return np.array([-y2 - y1 * y3, y1 - y2 * y3, -0.5 * (1.0 + y3 * y3 - y1 * y1 - y2 * y2)])


def hopf_field() -> VectorField:
    """Hopf rotation x -> A x on S^3 in the ambient and both stereographic charts."""
    return VectorField(
        {"ambient": lambda x: HOPF_MATRIX @ x, "stereo-N": _hopf_stereo_north, "stereo-S": _hopf_stereo_south},
        name="hopf",
    )


def hopf_fiber(p: AmbientPoint, n=256):
    """Closed-form fiber through p, sampled at n angles in R^4."""
    t = np.linspace(0.0, TWO_PI, n, endpoint=False)
    x = np.asarray(p.x)
    z1 = (x[0] + 1j * x[1]) * np.exp(1j * t)
    z2 = (x[2] + 1j * x[3]) * np.exp(1j * t)
    return np.stack([z1.real, z1.imag, z2.real, z2.imag], axis=1)


def hopf_good_coordinates(p: AmbientPoint):
    """Coordinates (w, phi) near the fiber z1 = 0 in which the Hopf field reads w' = -i w, phi' = 1."""
    x = np.asarray(p.x)
    z1, z2 = x[0] + 1j * x[1], x[2] + 1j * x[3]
    if abs(z2) < 1e-12:
        raise DomainError("good coordinates need z2 != 0")
    w = z1 * np.conj(z2) ** 2 / abs(z2) ** 2
    return complex(w), wrap_angle(np.angle(z2))


def quasi_section_defect(p: ChartPoint) -> float:
    """Transversality of the Hopf field to {y2 = 0}: the normal component is y1."""
    if p.chart != "stereo-N":
        raise DomainError("expected a stereo-N point")
    return float(_hopf_stereo_north(p.array)[1])


# ---- linear model ----------------------------------------------------------

@dataclass(frozen=True)
class LocalModel:
    E: int
    r: float = 0.5

    def __post_init__(self):
        if int(self.E) != self.E or self.E == 0:
            raise ConfigError("the Euler number must be a nonzero integer")
        if not self.r > 0:
            raise ConfigError("tube radius must be positive")


def local_model_field(m: LocalModel) -> VectorField:
    E = float(m.E)

    def ev(c):
        return np.array([E * c[1], -E * c[0], 1.0])

    def jac(phi):
        return np.array([[0.0, E, 0.0], [-E, 0.0, 0.0], [0.0, 0.0, 0.0]])

    return VectorField({"local-torus": ev}, jac_on_curve=jac, name=f"local-model(E={m.E})")


register_observable("arg_w", TWO_PI, {"local-torus": lambda c: np.arctan2(c[1], c[0])})


# ---- bump profile ----------------------------------------------------------

def _h(t):
    return np.exp(-1.0 / t) if t > 0 else 0.0


def _dh(t):
    return np.exp(-1.0 / t) / (t * t) if t > 0 else 0.0


@dataclass(frozen=True)
class Bump:
    """Smooth radial cutoff: 1 for |w| <= inner, 0 for |w| >= outer."""

    outer: float = 0.5
    inner: float | None = None

    @property
    def r_in(self):
        return self.outer / 2 if self.inner is None else self.inner

    def __call__(self, rad):
        a, b = self.r_in, self.outer
        if rad <= a:
            return 1.0
        if rad >= b:
            return 0.0
        s = (rad - a) / (b - a)
        p, q = _h(1.0 - s), _h(s)
        return p / (p + q)

    def derivative(self, rad):
        a, b = self.r_in, self.outer
        if rad <= a or rad >= b:
            return 0.0
        s = (rad - a) / (b - a)
        p, q = _h(1.0 - s), _h(s)
        dp, dq = -_dh(1.0 - s), _dh(s)
        return (dp * q - p * dq) / (p + q) ** 2 / (b - a)


# ---- seeds -----------------------------------------------------------------

@dataclass(frozen=True)
class Seed:
    """A field on the solid torus with value and Jacobian, supported in |w| < support."""

    name: str
    value: Callable
    jacobian: Callable
    support: float
    kernel: int | None = None  # id of the compiled twin in _kernels, if any

    def as_field(self) -> VectorField:
        return VectorField({"local-torus": self.value}, name=self.name)


def _radial_parts(c, bump):
    x, y = c[0], c[1]
    rad = np.hypot(x, y)
    rho = bump(rad)
    drho = bump.derivative(rad)
    grad = np.array([x, y]) / rad * drho if rad > 0 else np.zeros(2)
    return rho, grad


def _seed_from_poly(name, poly, poly_jac, bump, kernel=None):
    """Seed = bump(|w|) * poly(x, y, phi) with poly vanishing to second order at w = 0."""

    def value(c):
        rho, _ = _radial_parts(c, bump)
        return rho * poly(c) if rho != 0.0 else np.zeros(3)

    def jacobian(c):
        rho, grad = _radial_parts(c, bump)
        if rho == 0.0:
            return np.zeros((3, 3))
        P = poly(c)
        J = rho * poly_jac(c)
        J[:, 0] += P * grad[0]
        J[:, 1] += P * grad[1]
        return J

    return Seed(name, value, jacobian, bump.outer, kernel)


def radial_seed(r=0.5) -> Seed:
    """(x^2 + y^2) bump(|w|) (cos phi, sin phi, 0): pushes the base disc along a phi-dependent direction."""
    bump = Bump(r)

    def poly(c):
        x, y, p = c
        q = x * x + y * y
        return np.array([q * np.cos(p), q * np.sin(p), 0.0])

    def poly_jac(c):
        x, y, p = c
        q = x * x + y * y
        cp, sp = np.cos(p), np.sin(p)
        return np.array([[2 * x * cp, 2 * y * cp, -q * sp], [2 * x * sp, 2 * y * sp, q * cp], [0.0, 0.0, 0.0]])

    return _seed_from_poly("radial", poly, poly_jac, bump, _k.RADIAL)


def mixed_seed(r=0.5) -> Seed:
    """Moves both the base and the fiber coordinate."""
    bump = Bump(r)

    def poly(c):
        x, y, p = c
        return np.array([x * y * np.sin(p), 0.5 * (x * x - y * y), (x * x + y * y) * np.cos(p)])

    def poly_jac(c):
        x, y, p = c
        sp, cp = np.sin(p), np.cos(p)
        return np.array([
            [y * sp, x * sp, x * y * cp],
            [x, -y, 0.0],
            [2 * x * cp, 2 * y * cp, -(x * x + y * y) * sp],
        ])

    return _seed_from_poly("mixed", poly, poly_jac, bump, _k.MIXED)


def twist_seed(r=0.5) -> Seed:
    """Shears the base disc with a phi-dependent quadratic profile."""
    bump = Bump(r)

    def poly(c):
        x, y, p = c
        return np.array([y * y * np.cos(2 * p), x * x + x * y * np.sin(p), 0.25 * x * y])

    def poly_jac(c):
        x, y, p = c
        return np.array([
            [0.0, 2 * y * np.cos(2 * p), -2 * y * y * np.sin(2 * p)],
            [2 * x + y * np.sin(p), x * np.sin(p), x * y * np.cos(p)],
            [0.25 * y, 0.25 * x, 0.0],
        ])

    return _seed_from_poly("twist", poly, poly_jac, bump, _k.TWIST)


SEEDS = {"radial": radial_seed, "mixed": mixed_seed, "twist": twist_seed}


@dataclass(frozen=True)
class SpeedProfile:
    """k in the speed modulation 1 + eps * k; vanishes to second order on the core."""

    r: float = 0.5

    def __call__(self, c):
        x, y, p = c
        return Bump(self.r)(np.hypot(x, y)) * (x * x + 0.5 * y * y) * (1.0 + np.sin(p))


def speed_profile(r=0.5):
    return SpeedProfile(r)


# ---- perturbations ---------------------------------------------------------

@dataclass(frozen=True)
class PerturbationSpec:
    """X_eps = (1 + eps*k) * psi_* X0 where psi approximates the time-eps flow of the seed.

    ``pull_back`` is one RK4 step of the seed flow for time -eps (with its exact
    Jacobian); psi is its inverse, so X_eps(q) = DB(q)^{-1} X0(B(q)) with B = pull_back.
    """

    seed: Seed
    epsilon: float
    model: LocalModel
    speed: Callable | None = None
    substeps: int = 1
    field: VectorField = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "field", self._build_field())

    def pull_back(self, c):
        """(B(c), DB(c)) for B the RK4 approximation of the time -eps seed flow."""
        y = np.array(c, dtype=float)
        M = np.eye(3)
        if self.epsilon == 0.0:
            return y, M
        h = -self.epsilon / self.substeps
        Z, DZ = self.seed.value, self.seed.jacobian
        I3 = np.eye(3)
        for _ in range(self.substeps):
            k1, d1 = Z(y), DZ(y)
            y2 = y + 0.5 * h * k1
            k2, d2 = Z(y2), DZ(y2) @ (I3 + 0.5 * h * d1)
            y3 = y + 0.5 * h * k2
            k3, d3 = Z(y3), DZ(y3) @ (I3 + 0.5 * h * d2)
            y4 = y + h * k3
            k4, d4 = Z(y4), DZ(y4) @ (I3 + h * d3)
            y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            M = (I3 + h / 6.0 * (d1 + 2 * d2 + 2 * d3 + d4)) @ M
        return y, M

    def psi_inverse(self, p: ChartPoint) -> ChartPoint:
        return ChartPoint("local-torus", tuple(self.pull_back(p.array)[0]))

    def psi(self, p: ChartPoint) -> ChartPoint:
        """The conjugating diffeomorphism (Newton inversion of pull_back)."""
        q = np.array(p.coords)
        z = q + self.epsilon * self.seed.value(q)
        for _ in range(50):
            b, J = self.pull_back(z)
            d = b - q
            d[2] = (d[2] + np.pi) % TWO_PI - np.pi
            step = np.linalg.solve(J, d)
            z = z - step
            if np.max(np.abs(step)) < 1e-15:
                break
        return ChartPoint("local-torus", tuple(z))

    def _build_field(self):
        E = float(self.model.E)
        eps = self.epsilon
        speed = self.speed
        compiled = self.seed.kernel is not None and (speed is None or
                                                     (isinstance(speed, SpeedProfile) and speed.r == self.seed.support))

        if compiled:
            args = (self.seed.kernel, float(self.seed.support), eps, int(self.substeps), E, speed is not None)

            def ev(c):
                return _k.perturbed(*args, c)
        else:
            def ev(c):
                b, J = self.pull_back(c)
                v = np.linalg.solve(J, np.array([E * b[1], -E * b[0], 1.0]))
                if speed is not None and eps != 0.0:
                    v = (1.0 + eps * speed(c)) * v
                return v

        def jac(phi, h=1e-5):
            out = np.empty((3, 3))
            base = np.array([0.0, 0.0, phi])
            for j in range(3):
                e = np.zeros(3)
                e[j] = h
                out[:, j] = (ev(base + e) - ev(base - e)) / (2 * h)
            return out

        return VectorField({"local-torus": ev}, jac_on_curve=jac, name=f"perturbed-{self.seed.name}")


def make_tangent_perturbation(seed: Seed, epsilon: float, model: LocalModel | None = None,
                              speed: Callable | None = None, rng=None) -> PerturbationSpec:
    model = model or LocalModel(1)
    rng = rng or np.random.default_rng(0)
    # support and core checks
    for _ in range(64):
        rad = seed.support * (1.0 + rng.random())
        a, p = rng.uniform(0, TWO_PI, size=2)
        v = seed.value(np.array([rad * np.cos(a), rad * np.sin(a), p]))
        if np.max(np.abs(v)) > 1e-12:
            raise SupportError(f"seed {seed.name} is nonzero outside |w| < {seed.support}")
    for p in np.linspace(0, TWO_PI, 16, endpoint=False):
        if np.max(np.abs(seed.value(np.array([0.0, 0.0, p])))) > 1e-12:
            raise SupportError(f"seed {seed.name} does not vanish on the core circle")
    if seed.support > model.r + 1e-12:
        raise SupportError("seed support exceeds the tube")
    return PerturbationSpec(seed, float(epsilon), model, speed)


# ---- straightening ---------------------------------------------------------

@dataclass(frozen=True)
class Straightening:
    """Time-one flow of bump(|w|) * (-x_c(phi), -y_c(phi), 0)."""

    curve: Callable
    epsilon: float
    bump: Bump
    tol: float = 1e-12

    @property
    def field(self) -> VectorField:
        def ev(c):
            rho = self.bump(np.hypot(c[0], c[1]))
            if rho == 0.0:
                return np.zeros(3)
            cx, cy = self.curve(c[2], self.epsilon)
            return np.array([-rho * cx, -rho * cy, 0.0])

        return VectorField({"local-torus": ev}, name="straightening")

    def __call__(self, p: ChartPoint) -> ChartPoint:
        return integrate(self.field, p, 1.0, self.tol, h_max=None).end

    def inverse(self, p: ChartPoint) -> ChartPoint:
        return integrate(self.field, p, -1.0, self.tol, h_max=None).end


def straighten_seifert_curve(curve: Callable, epsilon: float, bump: Bump | None = None, tol=1e-12) -> Straightening:
    """Diffeomorphism sending the curve {w = curve(phi, eps)} onto the core circle."""
    return Straightening(curve, epsilon, bump or Bump(0.5), tol)
