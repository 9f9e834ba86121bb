import csv

import numpy as np
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from bundlelab.errors import ConfigError, NonReturningBase
from bundlelab.flow import integrate
from bundlelab.geometry import TWO_PI, ChartPoint
from bundlelab.thurston import (SWEEP_COLUMNS, FiberProductPoint, HeisPoint, ThurstonParams, TorusPoint,
                                alpha_profile, analytic_fiber_shift, closure_defect, drift_closed_form, drift_field,
                                dynamical_phase, fiber_product_point, geometric_phase, heis_mul, heis_reduce,
                                leaf_geometry, sweep, thurston_field, write_sweep_csv)

unit = st.floats(-20, 20, allow_nan=False)


# ---- drift circles ----

def test_drift_half_period():
    # the closed form z0 - i lam zeta0 (e^{it/lam} - 1) gives +2i at t = pi for lam = 1
    z = drift_closed_form(1.0, 0j, 1 + 0j, np.pi)
    assert abs(z - 2j) < 1e-15
    traj = integrate(drift_field(1.0), ChartPoint("unit-tangent", (0.0, 0.0, 0.0)), np.pi, 1e-12)
    assert abs(complex(*traj.end.coords[:2]) - 2j) < 1e-9


@pytest.mark.parametrize("lam", [0.3, 1.0, 4.0])
def test_drift_circle_closes_with_radius_lambda(lam):
    traj = integrate(drift_field(lam), ChartPoint("unit-tangent", (1.0, -2.0, 0.7)), TWO_PI * lam, 1e-12)
    assert abs(complex(*traj.end.coords[:2]) - complex(1.0, -2.0)) < 1e-8
    center = complex(1.0, -2.0) + 1j * lam * np.exp(0.7j)
    assert max(abs(abs(complex(c[0], c[1]) - center) - lam) for c in traj.coords) < 1e-9


def test_drift_direction_has_unit_length():
    # the direction is stored as an angle, so |zeta| = 1 holds identically; check the base speed instead
    traj = integrate(drift_field(0.5), ChartPoint("unit-tangent", (0.0, 0.0, 0.0)), 2.0, 1e-12)
    speeds = [np.hypot(*traj.field.eval("unit-tangent", c)[:2]) for c in traj.coords]
    assert max(abs(s - 1.0) for s in speeds) < 1e-12


def test_drift_rejects_nonpositive_lambda():
    with pytest.raises(ConfigError):
        drift_field(0.0)


# ---- Heisenberg arithmetic ----

def test_heis_reduce_examples():
    assert heis_reduce(0.5, 0.3, 0.2) == pytest.approx((0.5, 0.3, 0.2), abs=1e-15)
    assert heis_reduce(1.5, 0.3, 0.2) == pytest.approx((0.5, 0.3, 0.9), abs=1e-15)
    assert heis_reduce(0.0, 0.0, -0.25) == pytest.approx((0.0, 0.0, 0.75), abs=1e-15)


@given(unit, unit, unit)
def test_heis_reduce_is_a_projection(a, b, c):
    r = heis_reduce(a, b, c)
    assert all(0.0 <= v < 1.0 for v in r)
    assert heis_reduce(*r) == r


@settings(max_examples=200)
@given(unit, unit, unit, st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5))
@example(-2.220446049250313e-16, 0.0, 0.0, -2, 0, 0)
def test_heis_reduce_constant_on_lattice_cosets(a, b, c, m, n, k):
    # left multiplication by any lattice element, in any order, lands in the same coset
    g = heis_mul((m, n, k), (a, b, c))
    g2 = heis_mul((0, n, 0), heis_mul((m, 0, k), (a, b, c)))
    r, r1, r2 = heis_reduce(a, b, c), heis_reduce(*g), heis_reduce(*g2)
    # representatives may sit on opposite faces of the unit cube, so compare cosets: y x^-1 must be a lattice element
    for x, y in ((r, r1), (r, r2)):
        x_inv = (-x[0], -x[1], -x[2] + x[0] * x[1])
        ell = np.array(heis_mul(y, x_inv))
        assert np.max(np.abs(ell - np.round(ell))) < 1e-9


def test_heis_group_law():
    g, h = HeisPoint(0.1, 0.2, 0.3), HeisPoint(0.5, 0.25, 0.0)
    p = g * h
    assert (p.a, p.b, p.c) == pytest.approx((0.6, 0.45, 0.3 + 0.1 * 0.25))


# ---- points of the fiber product ----

def test_torus_point_reduced():
    t = TorusPoint(complex(-1.0, 7.0))
    assert 0 <= t.z.real < TWO_PI and 0 <= t.z.imag < TWO_PI
    assert t.z.imag == pytest.approx(7.0 - TWO_PI)


def test_fiber_product_point_validation():
    with pytest.raises(ValueError):
        FiberProductPoint(TorusPoint(0j), 1.1 + 0j, HeisPoint(0, 0, 0))
    with pytest.raises(ValueError):
        FiberProductPoint(TorusPoint(1j), 1 + 0j, HeisPoint(0, 0, 0))


def test_torus_consistency_preserved_along_flow():
    params = ThurstonParams.on_profile(1.3)
    traj = integrate(thurston_field(params), fiber_product_point(0.4 + 0.2j, np.exp(0.3j), 0.5), 12.0, 1e-11)
    for ch, c in zip(traj.charts, traj.coords):
        fp = FiberProductPoint.from_chart(ChartPoint(ch, tuple(c)))
        assert fp.torus_mismatch() < 1e-9
        assert abs(abs(fp.zeta) - 1.0) < 1e-10


# ---- parameters ----

def test_alpha_profile_examples():
    assert alpha_profile(0.0) == (1.0, 0.0)
    assert alpha_profile(2.0) == pytest.approx((0.5, 0.5))
    a1, a2 = alpha_profile(1e6)
    assert a1 < 1e-5 and a2 > 1 - 1e-5
    assert alpha_profile(np.inf) == (0.0, 1.0)


@given(st.floats(0.0, 1e4))
def test_alpha_profile_identities(lam):
    a1, a2 = alpha_profile(lam)
    assert a1 + a2 == pytest.approx(1.0)
    assert a2 == pytest.approx(a1 * lam / 2, rel=1e-12, abs=1e-300)


def test_params_validation():
    with pytest.raises(ConfigError):
        ThurstonParams(0.0, 1.0, 1.0)
    with pytest.raises(ConfigError):
        ThurstonParams(1.0, 0.0, 1.0)
    with pytest.raises(ConfigError):
        alpha_profile(-1.0)


# ---- phases ----

def test_geometric_phase_examples():
    assert geometric_phase(0.0) == 0.0
    assert geometric_phase(1.0) == pytest.approx(np.pi, rel=1e-8)
    assert geometric_phase(2.0) == pytest.approx(4 * np.pi, rel=1e-8)


def test_dynamical_phase_examples():
    assert dynamical_phase(ThurstonParams(1.0, 2.0, 1.0)) == pytest.approx(np.pi, rel=1e-12)
    assert dynamical_phase(ThurstonParams(1.0, 1.0, 0.55)) == pytest.approx(1.1 * np.pi, rel=1e-12)
    assert dynamical_phase(ThurstonParams(1.0, 1.0, 0.0)) == 0.0
    assert dynamical_phase(ThurstonParams(1.0, 0.7, 0.7)) == pytest.approx(TWO_PI, rel=1e-12)


@pytest.mark.parametrize("lam", [0.1, 0.5, 1.0, 2.0, 5.0])
def test_phases_agree_on_profile(lam):
    assert abs(geometric_phase(lam) - dynamical_phase(ThurstonParams.on_profile(lam))) < 1e-8


def test_zero_drift_moves_fiber_only_by_geometry():
    params = ThurstonParams(1.0, 1.0, 0.0)
    traj = integrate(thurston_field(params), fiber_product_point(), params.base_period, 1e-12)
    assert traj.end.coords[3] == pytest.approx(-np.pi, rel=1e-9)


# ---- closure ----

def test_closure_examples():
    assert closure_defect(ThurstonParams(1.0, 2 / 3, 1 / 3))[0] < 1e-6
    assert closure_defect(ThurstonParams(1.0, 1.0, 0.55))[0] == pytest.approx(0.1 * np.pi, abs=1e-8)
    assert closure_defect(ThurstonParams(2.0, 0.5, 0.5))[0] < 1e-6


@pytest.mark.parametrize("lam,ratio", [(0.5, 0.3), (1.7, 0.2), (3.0, 2.0), (7.0, 3.3)])
def test_closure_matches_analytic_shift(lam, ratio):
    params = ThurstonParams(lam, 1.0, ratio)
    d, k = closure_defect(params, fiber_product_point(0.3 + 1j, np.exp(2j), 0.1))
    shift = analytic_fiber_shift(params)
    assert k == round(shift / TWO_PI)
    assert d == pytest.approx(abs(shift - TWO_PI * k), abs=1e-8)


def test_off_ratio_defect_is_the_missed_phase():
    # a 5% ratio error leaves 0.05 pi lam^2 of phase, measured mod 2 pi
    for lam in np.arange(0.5, 20.01, 0.5):
        d, _ = closure_defect(ThurstonParams.on_profile(float(lam), 1.05))
        miss = np.mod(0.05 * np.pi * lam**2, TWO_PI)
        assert d == pytest.approx(min(miss, TWO_PI - miss), abs=1e-8)


def test_nonreturning_base():
    with pytest.raises(NonReturningBase):
        closure_defect(ThurstonParams.on_profile(1.0), tol=1e-2, base_tol=1e-14)


def test_closure_defect_continuous_along_profile():
    lams = np.arange(0.05, 3.0, 0.01)
    d = np.array([closure_defect(ThurstonParams.on_profile(float(l)), tol=1e-11)[0] for l in lams])
    assert np.max(np.abs(np.diff(d))) < 1e-4


# ---- limiting geometry ----

def test_leaf_geometry_at_the_ends():
    small = [leaf_geometry(ThurstonParams.on_profile(l))["base_diameter"] for l in (0.4, 0.1, 0.05)]
    assert small == sorted(small, reverse=True)
    assert small[-1] == pytest.approx(0.1, rel=1e-3)
    big = [leaf_geometry(ThurstonParams.on_profile(l))["fiber_fraction"] for l in (1.0, 5.0, 20.0)]
    assert big == sorted(big)
    assert big[-1] > 0.9


# ---- sweep output ----

def test_sweep_rows_and_csv(tmp_path):
    rows = sweep([1.0, 0.5, 2.0])
    assert [r["lambda"] for r in rows] == [0.5, 1.0, 2.0]
    path = tmp_path / "sweep.csv"
    write_sweep_csv(rows, path)
    table = list(csv.DictReader(path.open()))
    assert tuple(table[0].keys()) == SWEEP_COLUMNS
    assert float(table[1]["geometric_phase"]) == pytest.approx(np.pi, rel=1e-8)
    assert all(float(r["closure_defect"]) < 1e-6 for r in table)
