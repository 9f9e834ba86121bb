"""Numerical experiments behind the command line driver and the acceptance suite.

Every experiment is a function ``run_x(rng, **params) -> Outcome``.  Metrics
are plain floats, ints and lists so that reports serialize deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .blowup import (TransversalityForm, divisor_field, fiber_section, hopf_lifted_field, lift_field,
                     linking_number, strict_transform_section, transition_degree, transversality)
from .flow import (integrate, minimal_period, winding_count)
from .geometry import (TWO_PI, AmbientPoint, ChartPoint, blowup_chart_transition, sigma, sigma_jacobian,
                       stereo_inverse, stereo_north, stereo_south, transition_jacobian)
from .hopf import (SEEDS, LocalModel, hopf_field, local_model_field, make_tangent_perturbation,
                   quasi_section_defect, speed_profile, straighten_seifert_curve)
from .rigidity import (DiscShear, build_conjugacy, conjugacy_residuals, conjugated_linear_field,
                       conjugated_rotation, bochner_linearize, chart_distance, equivariance_check, isochronize,
                       montgomery_check,
                       numerical_return_map, period_function, polar_samples, rotation, suspend_conjugacy,
                       suspension_residuals)
from .thurston import (LAMBDA_RANGE, FiberProductPoint, ThurstonParams, analytic_fiber_shift, closure_defect,
                       drift_field, dynamical_phase, fiber_product_point, geometric_phase, sweep_row, thurston_field)


@dataclass
class Outcome:
    metrics: dict
    passed: bool
    trajectories: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


def random_s3_point(rng) -> ChartPoint:
    """Uniform point on S^3, in whichever stereographic chart keeps it away from the pole."""
    x = rng.normal(size=4)
    p = AmbientPoint(tuple(x / np.linalg.norm(x)))
    return stereo_north(p) if p.x[3] < 0.5 else stereo_south(p)


def random_tube_point(rng, r_min=0.05, r_max=0.45) -> ChartPoint:
    rad = rng.uniform(r_min, r_max)
    a, phi = rng.uniform(0.0, TWO_PI, size=2)
    return ChartPoint("local-torus", (rad * np.cos(a), rad * np.sin(a), phi))


def random_blowup_point(rng, x_min=0.0, x_max=0.45) -> ChartPoint:
    """Point of the blown-up tube with |x| (or |y|) in [x_min, x_max] and slope in [-1, 1]."""
    s = rng.uniform(x_min, x_max) * rng.choice([-1.0, 1.0])
    t = rng.uniform(-1.0, 1.0)
    phi = rng.uniform(0.0, TWO_PI)
    if rng.random() < 0.5:
        return ChartPoint("blowup-xu", (s, t, phi))
    return ChartPoint("blowup-vy", (t, s, phi))


def perturbed_model(E, epsilon, seed="radial", r=0.5):
    return make_tangent_perturbation(SEEDS[seed](r), epsilon, LocalModel(E, r), speed_profile(r))


# ---- 1: Hopf isochrony --------------------------------------------------------

def run_hopf_periods(rng, n=100, tol=1e-10, threshold=1e-8):
    f = hopf_field()
    errs, defects, drift = [], [], []
    trajs = []
    for _ in range(n):
        p = random_s3_point(rng)
        rep = minimal_period(f, p, 6.0, tol)
        errs.append(abs(rep.period - TWO_PI))
        defects.append(rep.closure_defect)
        traj = integrate(f, p, rep.period, tol)
        # closure measured in R^4, independent of which stereographic chart the orbit ended in
        gap = np.asarray(stereo_inverse(traj.end).x) - np.asarray(stereo_inverse(p).x)
        drift.append(float(np.linalg.norm(gap)))
        if len(trajs) < 3:
            trajs.append(traj)
    # {y2 = 0} is only a quasi-section: the normal component y1 changes sign across the y3 axis
    sigma_pts = [ChartPoint("stereo-N", (y1, 0.0, y3)) for y1, y3 in rng.uniform(-2.0, 2.0, size=(n, 2))]
    qs = [quasi_section_defect(p) for p in sigma_pts]
    qs_err = max(abs(q - p.coords[0]) for q, p in zip(qs, sigma_pts))
    m = {"max_period_error": max(errs), "max_closure_defect": max(defects), "n": n, "max_ambient_closure": max(drift),
         "quasi_section_normal_error": qs_err, "quasi_section_changes_sign": bool(min(qs) < 0 < max(qs))}
    return Outcome(m, m["max_period_error"] < threshold, trajectories=trajs)


# ---- 2: blow-down consistency ----------------------------------------------

def run_blowdown(rng, n=1000, Es=(1, 2, 3), epsilon=0.05, threshold=1e-9):
    """|d sigma (lifted field) - field o sigma| at points with |x| in [1e-3, 0.5]."""
    worst, overlaps = {}, {}
    for E in Es:
        for eps in (0.0, epsilon):
            base = perturbed_model(E, eps).field if eps else local_model_field(LocalModel(E))
            lifted = lift_field(base, E)
            res, overlap = 0.0, 0.0
            for _ in range(n // (2 * len(Es))):
                p = random_blowup_point(rng, 1e-3, 0.5)
                pushed = sigma_jacobian(p.chart, p.array) @ lifted(p)
                res = max(res, float(np.max(np.abs(pushed - base(sigma(p))))))
                # the two blow-up charts see the same lifted field on their overlap
                if p.chart == "blowup-xu" and abs(p.coords[1]) > 0.5:
                    q = blowup_chart_transition(p)
                    J = transition_jacobian("blowup-xu", p.array, "blowup-vy")
                    overlap = max(overlap, float(np.max(np.abs(J @ lifted(p) - lifted(q)))))
            worst[f"E={E},eps={eps:g}"] = res
            overlaps[f"E={E},eps={eps:g}"] = overlap
    m = {"max_residual": max(worst.values()), "per_case": worst, "n": n,
         "max_overlap_mismatch": max(overlaps.values())}
    return Outcome(m, m["max_residual"] < threshold and m["max_overlap_mismatch"] < 1e-6)


# ---- 3: divisor homotopy type -------------------------------------------------

def divisor_winding(f, p, tol=1e-10):
    traj = integrate(f, p, TWO_PI, tol)
    return winding_count(traj, "u_rp1"), winding_count(traj, "phi"), traj


def run_blowup_divisor(rng, Es=(1, 2, 3), tol=1e-10):
    found, trajs = {}, []
    ok = True
    for E in Es:
        u0 = rng.uniform(-1.0, 1.0)
        a, b, tr = divisor_winding(divisor_field(E), ChartPoint("blowup-xu", (0.0, u0, rng.uniform(0, TWO_PI))), tol)
        found[f"local E={E}"] = [a, b]
        ok &= (a, b) == (2 * E, 1)
        trajs.append(tr)
    a, b, tr = divisor_winding(hopf_lifted_field(), ChartPoint("stereoN-xu", (0.0, rng.uniform(-1, 1), 0.3)), tol)
    found["hopf"] = [a, b]
    ok &= (a, b) == (2, 1)
    trajs.append(tr)
    return Outcome({"windings": found}, bool(ok), trajectories=trajs)


# ---- 4: Euler number three ways --------------------------------------------

def run_linking(rng, Es=(1, 2, 3), tol=1e-10):
    table = {}
    ok = True
    for E in Es:
        f = local_model_field(LocalModel(E))
        core = integrate(f, ChartPoint("local-torus", (0.0, 0.0, 0.0)), TWO_PI, tol)
        rad, a = rng.uniform(0.1, 0.4), rng.uniform(0, TWO_PI)
        near = integrate(f, ChartPoint("local-torus", (rad * np.cos(a), rad * np.sin(a), 0.0)), TWO_PI, tol)
        lk = linking_number(core, near)
        deg = transition_degree(E, 64)
        u_wind, _, _ = divisor_winding(divisor_field(E), ChartPoint("blowup-xu", (0.0, 0.2, 0.0)), tol)
        table[f"E={E}"] = {"linking": lk, "transition_degree": deg, "half_divisor_winding": u_wind / 2}
        ok &= lk == deg == u_wind / 2 == E
    f = hopf_field()
    a = integrate(f, random_s3_point(rng), TWO_PI, tol)
    b = integrate(f, random_s3_point(rng), TWO_PI, tol)
    hopf = [linking_number(a, b), linking_number(b, a)]
    ok &= hopf == [1, 1]
    return Outcome({"local": table, "hopf_linking": hopf}, bool(ok))


def run_transition_degree(rng, Es=(1, 2, 3, -1, -2), n_samples=64):
    degs = {str(E): transition_degree(E, n_samples) for E in Es}
    return Outcome({"degrees": degs}, all(degs[str(E)] == E for E in Es))


# ---- 5: transversality --------------------------------------------------------

def run_transversality(rng, n=1000, Es=(1, 2, 3), epsilon=0.05, seed="radial", tol_exact=1e-12, bound=-0.5,
                       divisor_tol=1e-8):
    dev0, worst_eps, div = 0.0, -np.inf, 0.0
    per = -(-n // len(Es))
    for E in Es:
        form = TransversalityForm(E)
        f0 = lift_field(local_model_field(LocalModel(E)), E)
        fe = lift_field(perturbed_model(E, epsilon, seed).field, E)
        fd = divisor_field(E)
        for _ in range(per):
            p = random_blowup_point(rng)
            dev0 = max(dev0, abs(transversality(form, f0, p) + 1.0))
            worst_eps = max(worst_eps, transversality(form, fe, p))
            q = ChartPoint(p.chart, (0.0, p.coords[1], p.coords[2]) if p.chart == "blowup-xu"
                           else (p.coords[0], 0.0, p.coords[2]))
            div = max(div, float(np.max(np.abs(fe(q) - fd(q)))))
    m = {"max_unperturbed_deviation": dev0, "max_perturbed_value": worst_eps, "max_divisor_difference": div,
         "n": per * len(Es), "epsilon": epsilon}
    return Outcome(m, dev0 < tol_exact and worst_eps < bound and div < divisor_tol)


# ---- 6: periodicity of the return map --------------------------------------------

def run_montgomery(rng, Es=(1, 2, 3), epsilons=(0.0, 0.05), n=50, tol=1e-9, seed="radial"):
    reports = {}
    ok = True
    for E in Es:
        for eps in epsilons:
            base = perturbed_model(E, eps, seed).field if eps else local_model_field(LocalModel(E))
            rep = montgomery_check(lift_field(base, E), strict_transform_section(E), E, n, rng, tol, strict=False)
            reports[f"E={E},eps={eps:g}"] = rep
            ok &= rep["pass"]
    m = {"cases": reports,
         "max_closing_displacement": max(r["max_closing_displacement"] for r in reports.values()),
         "min_displacement_before_closing": min(r["min_over_k_of_max_displacement"] for r in reports.values())}
    return Outcome(m, bool(ok))


# ---- 7: rigidity conjugacy --------------------------------------------------------

def rigidity_pipeline(E, epsilon, seed="radial", tol=1e-9):
    """(isochronized lifted perturbation, lifted model, conjugacy between them)."""
    lifted = lift_field(perturbed_model(E, epsilon, seed).field, E)
    T = period_function(lifted, strict_transform_section(E), E, tol)
    f_eps = isochronize(lifted, T)
    f0 = lift_field(local_model_field(LocalModel(E)), E)
    return f_eps, f0, build_conjugacy(f_eps, f0, fiber_section(0.0), tol, epsilon)


def rigidity_case(rng, E, epsilon, seed, n_points, n_times, n_equiv, tol):
    _, _, c = rigidity_pipeline(E, epsilon, seed, tol)
    pts = [random_tube_point(rng) for _ in range(n_points)]
    times = [0.1 * k * TWO_PI for k in range(1, n_times + 1)]
    conj = conjugacy_residuals(c, pts, times)
    eq = equivariance_check(c, n_equiv, lambda g, k: [random_tube_point(g) for _ in range(k)], rng)
    return float(conj.max()), eq, len(conj)


def run_rigidity(rng, E=1, epsilons=(0.01, 0.05), seeds=("radial", "mixed", "twist"), n_points=10, n_times=10,
                 n_equiv=20, tol=1e-9, identity_tol=1e-12, threshold=1e-5, identity_threshold=1e-10):
    cases = {}
    for seed in seeds:
        for eps in epsilons:
            conj, eq, ns = rigidity_case(rng, E, eps, seed, n_points, n_times, n_equiv, tol)
            cases[f"{seed},eps={eps:g}"] = {"conjugacy_residual": conj, "equivariance_residual": eq}
    _, _, c0 = rigidity_pipeline(E, 0.0, seeds[0], identity_tol)
    ident = max(chart_distance(p, c0(p)) for p in (random_tube_point(rng) for _ in range(n_points)))
    max_res = max(max(v.values()) for v in cases.values())
    m = {"cases": cases, "max_residual": max_res, "identity_residual": ident,
         "n_samples": n_points * n_times}
    return Outcome(m, max_res < threshold and ident < identity_threshold,
                   extra={"E": E, "epsilon": max(epsilons), "tolerance": tol, "max_residual": max_res,
                          "n_samples": n_points * n_times})


# ---- 8: straightening --------------------------------------------------------------

def circle_curve(phi, eps):
    return eps * np.cos(phi), eps * np.sin(phi)


def run_straighten(rng, epsilon=0.1, n=64, tol=1e-12, leaf_tol=1e-8, outside_tol=1e-12):
    eta = straighten_seifert_curve(circle_curve, epsilon, tol=tol)
    phis = np.linspace(0.0, TWO_PI, n, endpoint=False)
    leaf = 0.0
    for phi in phis:
        x, y = circle_curve(phi, epsilon)
        q = eta(ChartPoint("local-torus", (x, y, phi)))
        leaf = max(leaf, float(np.hypot(q.coords[0], q.coords[1])))
    out = 0.0
    for _ in range(n):
        rad, a, phi = rng.uniform(0.5, 0.9), rng.uniform(0, TWO_PI), rng.uniform(0, TWO_PI)
        p = ChartPoint("local-torus", (rad * np.cos(a), rad * np.sin(a), phi))
        out = max(out, chart_distance(p, eta(p)))
    m = {"max_leaf_distance_to_core": leaf, "max_outside_displacement": out, "n": n, "epsilon": epsilon}
    return Outcome(m, leaf < leaf_tol and out < outside_tol)


# ---- 9: Bochner averaging and suspension ---------------------------------------------

def run_bochner(rng, ls=(1, 2, 3), size=0.05, r_max=0.4, grid=32, n_suspension=3, tol=1e-11,
                threshold=1e-6, suspension_threshold=1e-5):
    cases = {}
    shear = DiscShear(size)
    w = polar_samples(r_max, grid, grid)
    for l in ls:
        P = conjugated_rotation(l, shear)
        zeta = bochner_linearize(P, l)
        res = float(np.max(np.abs(zeta(P(w)) - rotation(l)(zeta(w)))))
        X = conjugated_linear_field(l, shear)
        zeta_num = bochner_linearize(numerical_return_map(X, tol), l, samples=polar_samples(r_max, 2, 4))
        eta = suspend_conjugacy(zeta_num, X, l, tol=tol)
        pts = [random_tube_point(rng, 0.05, 0.35) for _ in range(n_suspension)]
        times = list(rng.uniform(0.0, TWO_PI, size=3))
        susp = float(suspension_residuals(eta, pts, times).max())
        cases[f"l={l}"] = {"bochner_residual": res, "suspension_residual": susp}
    m = {"cases": cases, "max_bochner_residual": max(c["bochner_residual"] for c in cases.values()),
         "max_suspension_residual": max(c["suspension_residual"] for c in cases.values()), "grid": [grid, grid]}
    return Outcome(m, m["max_bochner_residual"] < threshold and m["max_suspension_residual"] < suspension_threshold)


# ---- 10: Thurston family -------------------------------------------------------------

def lambda_grid(lmin, lmax, step):
    k = int(np.floor((lmax - lmin) / step + 1e-9))
    return [round(lmin + i * step, 12) for i in range(k + 1)]


def run_thurston_phases(rng, lams=(0.1, 0.5, 1.0, 2.0, 5.0), threshold=1e-8):
    rel = {}
    for lam in lams:
        g = geometric_phase(lam)
        d = dynamical_phase(ThurstonParams.on_profile(lam))
        # the drift circle bounding the area whose phase is measured closes after 2 pi lam
        circ = integrate(drift_field(lam), ChartPoint("unit-tangent", (0.0, 0.0, 0.0)), TWO_PI * lam, 1e-12)
        rel[str(lam)] = {"geometric_rel_error": abs(g / (np.pi * lam**2) - 1.0),
                         "phase_mismatch": abs(g - d),
                         "drift_closure_error": float(np.hypot(*circ.end.coords[:2]))}
    worst = max(v["geometric_rel_error"] for v in rel.values())
    mism = max(v["phase_mismatch"] for v in rel.values())
    drift = max(v["drift_closure_error"] for v in rel.values())
    return Outcome({"per_lambda": rel, "max_geometric_rel_error": worst, "max_phase_mismatch": mism,
                    "max_drift_closure_error": drift},
                   worst < threshold and mism < threshold and drift < threshold)


def run_thurston_sweep(rng, lmin=LAMBDA_RANGE[0], lmax=LAMBDA_RANGE[1], step=0.05, ratio_factor=1.0, tol=1e-11,
                       closure_threshold=1e-6, phase_threshold=1e-8, off_threshold=0.05, off_lmin=0.5):
    """Sweep along the profile (ratio_factor = 1) or with alpha2/alpha1 = ratio_factor * lam / 2."""
    rows = [sweep_row(lam, ratio_factor, tol) for lam in lambda_grid(lmin, lmax, step)]
    rel = max(abs(r["geometric_phase"] / (np.pi * r["lambda"] ** 2) - 1.0) for r in rows)
    defect = max(r["closure_defect"] for r in rows)
    m = {"n_lambda": len(rows), "max_geometric_rel_error": rel, "max_closure_defect": defect,
         "ratio_factor": ratio_factor}
    if ratio_factor == 1.0:
        passed = rel < phase_threshold and defect < closure_threshold
    else:
        tail = [r for r in rows if r["lambda"] >= off_lmin]
        low = min(tail, key=lambda r: r["closure_defect"])
        m["min_off_ratio_defect"] = low["closure_defect"]
        m["argmin_lambda"] = low["lambda"]
        m["n_below_threshold"] = sum(r["closure_defect"] <= off_threshold for r in tail)
        passed = rel < phase_threshold and low["closure_defect"] > off_threshold
    return Outcome(m, bool(passed), rows=rows)


def run_thurston_closure(rng, lam=1.0, ratio=None, alpha1=None, alpha2=None, tol=1e-12, threshold=1e-6):
    """Closure defect for one parameter set, compared with the analytic fiber shift."""
    if alpha1 is not None and alpha2 is not None:
        params = ThurstonParams(lam, alpha1, alpha2)
    elif ratio is not None:
        a1 = 2.0 / (2.0 + lam)
        params = ThurstonParams(lam, a1, ratio * a1)
    else:
        params = ThurstonParams.on_profile(lam)
    defect, k = closure_defect(params, tol=tol)
    shift = analytic_fiber_shift(params)
    oracle = abs(shift - TWO_PI * np.round(shift / TWO_PI))
    # the end point, read in the fiber product, must still project consistently to the torus
    end = integrate(thurston_field(params), fiber_product_point(), params.base_period, tol).end
    mismatch = FiberProductPoint.from_chart(end).torus_mismatch()
    m = {"closure_defect": defect, "k_detected": k, "analytic_defect": float(oracle),
         "alpha1": params.alpha1, "alpha2": params.alpha2, "closes": defect < threshold,
         "torus_mismatch": mismatch}
    return Outcome(m, abs(defect - oracle) < threshold and mismatch < 1e-9)


# ---- 11: integrator order --------------------------------------------------------------

def run_integrator_order(rng, n=20, tol=1e-10, required_gain=4.0):
    """Max Hopf closure defect at tol and at tol/2 over the same points."""
    f = hopf_field()
    pts = [random_s3_point(rng) for _ in range(n)]
    d1 = max(minimal_period(f, p, 6.0, tol).closure_defect for p in pts)
    d2 = max(minimal_period(f, p, 6.0, tol / 2).closure_defect for p in pts)
    gain = d1 / d2 if d2 > 0 else np.inf
    return Outcome({"defect_at_tol": d1, "defect_at_half_tol": d2, "gain": float(gain), "tol": tol},
                   gain >= required_gain)
