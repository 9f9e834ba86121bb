"""Compiled versions of the built-in seeds and of the perturbed local-model field.

The pure Python seeds in :mod:`bundlelab.hopf` are the reference; these
kernels reproduce them and are used by :class:`PerturbationSpec` whenever the
seed is one of the built-in ones.
"""

import numpy as np
from numba import njit

RADIAL, MIXED, TWIST = 0, 1, 2


@njit(cache=True)
def _h(t):
    return np.exp(-1.0 / t) if t > 0 else 0.0


@njit(cache=True)
def _dh(t):
    return np.exp(-1.0 / t) / (t * t) if t > 0 else 0.0


@njit(cache=True)
def bump(rad, a, b):
    if rad <= a:
        return 1.0, 0.0
    if rad >= b:
        return 0.0, 0.0
    s = (rad - a) / (b - a)
    p = _h(1.0 - s)
    q = _h(s)
    dp = -_dh(1.0 - s)
    dq = _dh(s)
    return p / (p + q), (dp * q - p * dq) / (p + q) ** 2 / (b - a)


@njit(cache=True)
def seed(kind, r, c, val, jac):
    x, y, p = c[0], c[1], c[2]
    rad = np.hypot(x, y)
    rho, drho = bump(rad, 0.5 * r, r)
    for i in range(3):
        val[i] = 0.0
        for j in range(3):
            jac[i, j] = 0.0
    if rho == 0.0:
        return
    gx = x / rad * drho if rad > 0 else 0.0
    gy = y / rad * drho if rad > 0 else 0.0
    sp, cp = np.sin(p), np.cos(p)
    if kind == RADIAL:
        q = x * x + y * y
        val[0] = q * cp
        val[1] = q * sp
        jac[0, 0] = 2 * x * cp
        jac[0, 1] = 2 * y * cp
        jac[0, 2] = -q * sp
        jac[1, 0] = 2 * x * sp
        jac[1, 1] = 2 * y * sp
        jac[1, 2] = q * cp
    elif kind == MIXED:
        val[0] = x * y * sp
        val[1] = 0.5 * (x * x - y * y)
        val[2] = (x * x + y * y) * cp
        jac[0, 0] = y * sp
        jac[0, 1] = x * sp
        jac[0, 2] = x * y * cp
        jac[1, 0] = x
        jac[1, 1] = -y
        jac[2, 0] = 2 * x * cp
        jac[2, 1] = 2 * y * cp
        jac[2, 2] = -(x * x + y * y) * sp
    else:
        c2, s2 = np.cos(2 * p), np.sin(2 * p)
        val[0] = y * y * c2
        val[1] = x * x + x * y * sp
        val[2] = 0.25 * x * y
        jac[0, 1] = 2 * y * c2
        jac[0, 2] = -2 * y * y * s2
        jac[1, 0] = 2 * x + y * sp
        jac[1, 1] = x * sp
        jac[1, 2] = x * y * cp
        jac[2, 0] = 0.25 * y
        jac[2, 1] = 0.25 * x
    for i in range(3):
        jac[i, 0] = rho * jac[i, 0] + val[i] * gx
        jac[i, 1] = rho * jac[i, 1] + val[i] * gy
        jac[i, 2] = rho * jac[i, 2]
        val[i] = rho * val[i]


@njit(cache=True)
def pull_back(kind, r, eps, substeps, c):
    y = c.copy()
    M = np.eye(3)
    if eps == 0.0:
        return y, M
    h = -eps / substeps
    I3 = np.eye(3)
    k1 = np.empty(3)
    k2 = np.empty(3)
    k3 = np.empty(3)
    k4 = np.empty(3)
    d1 = np.empty((3, 3))
    j2 = np.empty((3, 3))
    j3 = np.empty((3, 3))
    j4 = np.empty((3, 3))
    for _ in range(substeps):
        seed(kind, r, y, k1, d1)
        seed(kind, r, y + 0.5 * h * k1, k2, j2)
        d2 = j2 @ (I3 + 0.5 * h * d1)
        seed(kind, r, y + 0.5 * h * k2, k3, j3)
        d3 = j3 @ (I3 + 0.5 * h * d2)
        seed(kind, r, y + h * k3, k4, j4)
        d4 = j4 @ (I3 + h * d3)
        y = y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        M = (I3 + h / 6.0 * (d1 + 2 * d2 + 2 * d3 + d4)) @ M
    return y, M


@njit(cache=True)
def speed(r, c):
    x, y, p = c[0], c[1], c[2]
    rho, _ = bump(np.hypot(x, y), 0.5 * r, r)
    return rho * (x * x + 0.5 * y * y) * (1.0 + np.sin(p))


@njit(cache=True)
def perturbed(kind, r, eps, substeps, E, use_speed, c):
    b, J = pull_back(kind, r, eps, substeps, c)
    rhs = np.empty(3)
    rhs[0] = E * b[1]
    rhs[1] = -E * b[0]
    rhs[2] = 1.0
    v = np.linalg.solve(J, rhs)
    if use_speed and eps != 0.0:
        v = (1.0 + eps * speed(r, c)) * v
    return v
