import numpy as np
import pytest

from bundlelab.blowup import (TransversalityForm, divisor_field, fiber_section, hopf_lifted_field, lift_field,
                              linking_number, strict_transform_section, transition_degree, transversality)
from bundlelab.errors import Ambiguous, JacobianUnavailable, NotClosed, TooClose, UndersampledError
from bundlelab.experiments import perturbed_model, random_blowup_point
from bundlelab.flow import VectorField, crossing_times, integrate, minimal_period, winding_count
from bundlelab.geometry import TWO_PI, ChartPoint, sigma, sigma_jacobian
from bundlelab.hopf import SEEDS, LocalModel, hopf_field, local_model_field


def model_lift(E):
    return lift_field(local_model_field(LocalModel(E)), E)


# ---- lift ----

@pytest.mark.parametrize("E", [1, 2, 3, -2])
def test_lift_examples(E):
    f = model_lift(E)
    assert np.allclose(f(ChartPoint("blowup-xu", (1.0, 0.0, 0.0))), (0, -E, 1), atol=1e-15)
    for u in (-1.3, 0.0, 0.6):
        assert np.allclose(f(ChartPoint("blowup-xu", (0.0, u, 2.0))), (0, -E * (1 + u * u), 1), atol=1e-12)


def test_hopf_lift_example():
    assert np.allclose(hopf_lifted_field()(ChartPoint("stereoN-xu", (1.0, 0.0, 0.0))), (0, 1, 0))


def test_divisor_closed_form():
    traj = integrate(divisor_field(1), ChartPoint("blowup-xu", (0.0, 0.0, 0.0)), np.pi / 4, 1e-12)
    assert traj.end.to("blowup-xu").coords[1] == pytest.approx(-1.0, abs=1e-9)


def test_divisor_period_sweep():
    # u sweeps RP^1 once every pi/E: half a turn of phi for E=1
    f = divisor_field(2)
    traj = integrate(f, ChartPoint("blowup-xu", (0.0, 0.3, 0.0)), np.pi / 2, 1e-11)
    assert winding_count(traj, "u_rp1") == 1


def test_blowdown_consistency():
    rng = np.random.default_rng(11)
    for E in (1, 2, 3):
        base = perturbed_model(E, 0.05, "mixed").field
        lifted = lift_field(base, E)
        for _ in range(200):
            p = random_blowup_point(rng, 1e-3, 0.5)
            pushed = sigma_jacobian(p.chart, p.array) @ lifted(p)
            assert np.max(np.abs(pushed - base(sigma(p)))) < 1e-9


def test_lift_continuous_across_divisor():
    f = lift_field(perturbed_model(2, 0.05, "twist").field, 2)
    for u in (-0.8, 0.1, 0.9):
        on = f(ChartPoint("blowup-xu", (0.0, u, 1.0)))
        near = f(ChartPoint("blowup-xu", (1e-6, u, 1.0)))
        assert np.max(np.abs(on - near)) < 1e-4


def test_divisor_independent_of_perturbation():
    rng = np.random.default_rng(12)
    names = sorted(SEEDS)
    for k in range(10):
        E = int(rng.choice([1, 2, 3]))
        spec = perturbed_model(E, float(rng.uniform(0.01, 0.1)), names[k % len(names)])
        f, f0 = lift_field(spec.field, E), model_lift(E)
        for _ in range(100):
            chart = "blowup-xu" if rng.random() < 0.5 else "blowup-vy"
            t, phi = rng.uniform(-1.5, 1.5), rng.uniform(0, TWO_PI)
            p = ChartPoint(chart, (0.0, t, phi) if chart == "blowup-xu" else (t, 0.0, phi))
            assert np.max(np.abs(f(p) - f0(p))) < 1e-8


def test_lift_needs_local_chart():
    with pytest.raises(JacobianUnavailable):
        lift_field(VectorField({"stereo-N": lambda c: c}), 1)


# ---- section and transversality ----

def test_section_examples():
    s = strict_transform_section(1)
    assert s.value("blowup-xu", np.array([0.2, 0.0, 0.0])) == 0.0
    form = TransversalityForm(1)
    rng = np.random.default_rng(13)
    for E in (1, 2, 3, -1):
        f = model_lift(E)
        form = TransversalityForm(E)
        for p in strict_transform_section(E).sample(rng, 50):
            assert transversality(form, f, p) == pytest.approx(-1.0, abs=1e-12)


def test_transversality_perturbed_bounded_away():
    rng = np.random.default_rng(14)
    for E in (1, 2, 3):
        f = lift_field(perturbed_model(E, 0.05).field, E)
        form = TransversalityForm(E)
        vals = [transversality(form, f, random_blowup_point(rng, 0.0, 0.45)) for _ in range(300)]
        assert max(vals) < -0.5


def test_transversality_on_divisor_is_exact():
    rng = np.random.default_rng(15)
    f = lift_field(perturbed_model(2, 0.05, "mixed").field, 2)
    form = TransversalityForm(2)
    for _ in range(50):
        p = ChartPoint("blowup-xu", (0.0, rng.uniform(-1, 1), rng.uniform(0, TWO_PI)))
        assert transversality(form, f, p) == pytest.approx(-1.0, abs=1e-9)


def test_section_completeness():
    rng = np.random.default_rng(16)
    for E in (1, 2, 3):
        f = lift_field(perturbed_model(E, 0.05).field, E)
        s = strict_transform_section(E, c=0.3)
        for _ in range(8):
            p = random_blowup_point(rng, 0.0, 0.4)
            T = minimal_period(f, p, 6.0, 1e-10).period
            # count over one full period starting mid-orbit, away from the start point
            t0 = 0.37 * T
            times = [t for t in crossing_times(f, s, p, 1.5 * T, 1e-10) if t0 <= t < t0 + T]
            assert len(times) == 2 * E


def test_fiber_section_crossed_once():
    f = lift_field(perturbed_model(2, 0.05).field, 2)
    p = ChartPoint("blowup-xu", (0.2, 0.4, 0.5))
    assert len(crossing_times(f, fiber_section(0.0), p, 6.2, 1e-10)) == 1


# ---- linking and degree ----

def test_hopf_fibers_link_once():
    f = hopf_field()
    a = integrate(f, ChartPoint("stereo-N", (0.3, 0.1, -0.2)), TWO_PI, 1e-10)
    b = integrate(f, ChartPoint("stereo-N", (-1.2, 0.5, 0.4)), TWO_PI, 1e-10)
    assert linking_number(a, b) == 1
    assert linking_number(b, a) == 1


def _circle_traj(center, rad, axis=(0.0, 0.0, 1.0), start=0.0):
    """Circle in the stereo-N picture, traced at unit angular speed by a rotation about axis."""
    center, axis = np.asarray(center, float), np.asarray(axis, float) / np.linalg.norm(axis)
    e1 = np.cross(axis, [0.0, 0.0, 1.0]) if abs(axis[2]) < 0.99 else np.array([1.0, 0.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    f = VectorField({"stereo-N": lambda c: np.cross(axis, c - center)})
    p0 = center + rad * (np.cos(start) * e1 + np.sin(start) * e2)
    return integrate(f, ChartPoint("stereo-N", tuple(p0)), TWO_PI, 1e-11)


def test_far_circles_unlinked():
    assert linking_number(_circle_traj((0, 0, 0), 1.0), _circle_traj((5, 0, 0), 1.0)) == 0


def test_local_model_linking():
    for E in (1, 2, 3):
        f = local_model_field(LocalModel(E))
        core = integrate(f, ChartPoint("local-torus", (0, 0, 0)), TWO_PI, 1e-10)
        near = integrate(f, ChartPoint("local-torus", (0.2, 0.1, 0)), TWO_PI, 1e-10)
        assert linking_number(core, near) == E


def test_linking_errors():
    f = hopf_field()
    open_arc = integrate(f, ChartPoint("stereo-N", (0.3, 0.1, -0.2)), 2.0, 1e-10)
    closed = integrate(f, ChartPoint("stereo-N", (-1.2, 0.5, 0.4)), TWO_PI, 1e-10)
    with pytest.raises(NotClosed):
        linking_number(open_arc, closed)
    with pytest.raises(TooClose):
        linking_number(_circle_traj((0, 0, 0), 1.0), _circle_traj((2, 0, 0), 1.0))
    # with only eight samples per curve, a tilted circle crossing the other's rim gives a raw value near 1/3
    tilted = _circle_traj((0.9671, -0.0600, 0.1811), 0.9388, (-0.5697, 0.4630, -0.6790), 1.6721)
    with pytest.raises(Ambiguous):
        linking_number(_circle_traj((0, 0, 0), 1.0), tilted, n0=8, n_max=8)


def test_transition_degree():
    assert transition_degree(3, 64) == 3
    assert transition_degree(-2, 64) == -2
    with pytest.raises(UndersampledError):
        transition_degree(1, 4)


def test_euler_number_three_ways():
    for E in (1, 2, 3):
        traj = integrate(divisor_field(E), ChartPoint("blowup-xu", (0.0, 0.2, 0.0)), TWO_PI, 1e-10)
        assert winding_count(traj, "u_rp1") // 2 == transition_degree(E) == E
