import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bundlelab.errors import DomainError, OverlapError, PoleError
from bundlelab.geometry import (ATLAS, TWO_PI, AmbientPoint, ChartPoint, blowup_chart_transition, circular_distance,
                                sigma, sigma_jacobian, stereo_inverse, stereo_north, stereo_south, transition_jacobian,
                                wrap_angle, wrap_signed)

finite = st.floats(-50, 50, allow_nan=False)


def unit4(rng):
    x = rng.normal(size=4)
    return x / np.linalg.norm(x)


# ---- stereographic charts ----

def test_stereo_north_examples():
    assert np.allclose(stereo_north(AmbientPoint((0, 0, 0, -1))).coords, (0, 0, 0))
    assert np.allclose(stereo_north(AmbientPoint((1, 0, 0, 0))).coords, (1, 0, 0))
    with pytest.raises(PoleError):
        stereo_north(AmbientPoint((0, 0, 0, 1)))


def test_stereo_south_pole():
    with pytest.raises(PoleError):
        stereo_south(AmbientPoint((0, 0, 0, -1)))


def test_stereo_inverse_examples():
    assert np.allclose(stereo_inverse(ChartPoint("stereo-N", (0, 0, 0))).x, (0, 0, 0, -1))
    assert np.allclose(stereo_inverse(ChartPoint("stereo-N", (1, 0, 0))).x, (1, 0, 0, 0))


def test_ambient_point_requires_unit_norm():
    with pytest.raises(DomainError):
        AmbientPoint((1.0, 1.0, 0.0, 0.0))


@settings(max_examples=200, deadline=None)
@given(st.tuples(finite, finite, finite))
def test_stereo_round_trip(y):
    p = stereo_inverse(ChartPoint("stereo-N", y))
    assert abs(np.linalg.norm(p.x) - 1.0) < 1e-12
    back = stereo_north(p).array
    assert np.max(np.abs(back - np.array(y))) < 1e-12 * max(1.0, np.linalg.norm(y) ** 2)


def test_north_south_transition_is_inversion():
    rng = np.random.default_rng(3)
    for _ in range(100):
        x = unit4(rng)
        if abs(x[3]) > 0.9:
            continue
        p = AmbientPoint(tuple(x))
        n, s = stereo_north(p).array, stereo_south(p).array
        assert np.allclose(n / np.dot(n, n), s, atol=1e-12)
        assert np.allclose(ATLAS.convert_coords("stereo-N", n, "stereo-S"), s, atol=1e-12)


# ---- blow-up charts ----

def test_blowup_transition_examples():
    assert np.allclose(blowup_chart_transition(ChartPoint("blowup-xu", (1, 2, 0))).coords, (0.5, 2, 0))
    assert np.allclose(blowup_chart_transition(ChartPoint("blowup-xu", (0, 1, np.pi))).coords, (1, 0, np.pi))
    with pytest.raises(OverlapError):
        blowup_chart_transition(ChartPoint("blowup-xu", (1, 0, 0)))


def test_sigma_examples():
    assert np.allclose(sigma(ChartPoint("blowup-xu", (1, 0, 0))).coords, (1, 0, 0))
    for u in (-1.5, 0.0, 0.7):
        assert np.allclose(sigma(ChartPoint("blowup-xu", (0, u, 2.0))).coords, (0, 0, 2.0))
    assert np.allclose(sigma(ChartPoint("blowup-xu", (2, 0.5, np.pi))).coords, (2, 1, np.pi))
    assert np.allclose(sigma(ChartPoint("blowup-vy", (0.5, 0.2, 1.0))).coords, (0.1, 0.2, 1.0))


@settings(max_examples=200, deadline=None)
@given(st.floats(-0.5, 0.5).filter(lambda x: abs(x) > 1e-6), st.floats(-1.9, 1.9), st.floats(0, TWO_PI - 1e-9))
def test_sigma_fiberwise_inverse(x, u, phi):
    w = sigma(ChartPoint("blowup-xu", (x, u, phi))).array
    assert np.allclose((w[0], w[1] / w[0], w[2]), (x, u, phi), atol=1e-12)


def test_sigma_jacobian_matches_finite_differences():
    rng = np.random.default_rng(0)
    for chart in ("blowup-xu", "blowup-vy"):
        for _ in range(20):
            c = np.array([rng.uniform(-0.4, 0.4), rng.uniform(-1.5, 1.5), rng.uniform(0, 6)])
            J = sigma_jacobian(chart, c)
            h = 1e-6
            num = np.column_stack([(sigma(ChartPoint(chart, tuple(c + h * e))).array
                                    - sigma(ChartPoint(chart, tuple(c - h * e))).array) / (2 * h)
                                   for e in np.eye(3)])
            assert np.allclose(J, num, atol=1e-8)


# ---- atlas-wide properties ----

def _random_overlap_coords(rng, a, b):
    """Coordinates in chart a that also lie in chart b, or None."""
    samplers = {
        "stereo-N": lambda: rng.normal(size=3) * 1.5,
        "stereo-S": lambda: rng.normal(size=3) * 1.5,
        "local-torus": lambda: np.array([*rng.uniform(-0.45, 0.45, 2), rng.uniform(0, TWO_PI)]),
        "blowup-xu": lambda: np.array([rng.uniform(-0.4, 0.4), rng.uniform(-1.9, 1.9), rng.uniform(0, TWO_PI)]),
        "blowup-vy": lambda: np.array([rng.uniform(-1.9, 1.9), rng.uniform(-0.4, 0.4), rng.uniform(0, TWO_PI)]),
        "stereoN-xu": lambda: np.array([rng.uniform(-2, 2), rng.uniform(-1.9, 1.9), rng.uniform(-2, 2)]),
        "stereoN-vy": lambda: np.array([rng.uniform(-1.9, 1.9), rng.uniform(-2, 2), rng.uniform(-2, 2)]),
        "stereoS-xu": lambda: np.array([rng.uniform(-2, 2), rng.uniform(-1.9, 1.9), rng.uniform(-2, 2)]),
        "stereoS-vy": lambda: np.array([rng.uniform(-1.9, 1.9), rng.uniform(-2, 2), rng.uniform(-2, 2)]),
    }
    c = samplers[a]()
    if not ATLAS.chart(a).contains(c):
        return None
    try:
        cb = ATLAS.convert_coords(a, c, b)
    except (OverlapError, PoleError, DomainError, ZeroDivisionError, FloatingPointError):
        return None
    if not ATLAS.chart(b).contains(cb):
        return None
    return c, cb


GROUPS = [("stereo-N", "stereo-S"), ("local-torus", "blowup-xu", "blowup-vy"),
          ("stereoN-xu", "stereoN-vy", "stereoS-xu", "stereoS-vy")]


@pytest.mark.parametrize("a,b", [p for g in GROUPS for p in itertools.permutations(g, 2)])
def test_transition_round_trip(a, b):
    rng = np.random.default_rng(hash((a, b)) % 2**32)
    hits = 0
    for _ in range(1000):
        pair = _random_overlap_coords(rng, a, b)
        if pair is None:
            continue
        c, cb = pair
        back = ATLAS.convert_coords(b, cb, a)
        scale = max(1.0, float(np.max(np.abs(c))), float(np.max(np.abs(cb))))
        assert ATLAS.chart(a).distance(back, c) < 1e-12 * scale ** 3
        hits += 1
    assert hits > 100


@pytest.mark.parametrize("group", [g for g in GROUPS if len(g) == 3] + [GROUPS[2][:3], GROUPS[2][1:]])
def test_cocycle_on_triple_overlaps(group):
    a, b, c = group
    rng = np.random.default_rng(7)
    hits = 0
    for _ in range(500):
        pair = _random_overlap_coords(rng, a, b)
        if pair is None:
            continue
        x, xb = pair
        try:
            via = ATLAS.convert_coords(b, xb, c)
            direct = ATLAS.convert_coords(a, x, c)
        except (OverlapError, PoleError, DomainError, ZeroDivisionError, FloatingPointError):
            continue
        if not ATLAS.chart(c).contains(direct):
            continue
        scale = max(1.0, float(np.max(np.abs(direct))))
        assert ATLAS.chart(c).distance(via, direct) < 1e-12 * scale ** 3
        hits += 1
    assert hits > 20


def test_transition_jacobian_inverse_pair():
    c = np.array([0.3, 0.7, 1.0])
    J = transition_jacobian("blowup-xu", c, "blowup-vy")
    cb = ATLAS.convert_coords("blowup-xu", c, "blowup-vy")
    K = transition_jacobian("blowup-vy", cb, "blowup-xu")
    assert np.allclose(J @ K, np.eye(3), atol=1e-9)


# ---- angles ----

@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_wrap_angle_idempotent(a):
    w = wrap_angle(a)
    assert 0.0 <= w < TWO_PI
    assert wrap_angle(w) == w


@given(st.floats(-100, 100), st.floats(-100, 100))
def test_circular_distance_symmetric_and_bounded(a, b):
    d = circular_distance(a, b)
    assert 0 <= d <= np.pi + 1e-12
    assert abs(d - circular_distance(b, a)) < 1e-9


def test_chart_point_canonicalizes_angle():
    p = ChartPoint("local-torus", (0.1, 0.2, -np.pi / 2))
    assert abs(p.coords[2] - 1.5 * np.pi) < 1e-15
    assert abs(wrap_signed(3 * np.pi / 2) + np.pi / 2) < 1e-15


def test_chart_point_dimension_checked():
    with pytest.raises(DomainError):
        ChartPoint("local-torus", (0.1, 0.2))
