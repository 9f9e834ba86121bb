import csv
import json
import subprocess
import sys

import pytest

from bundlelab.cli import EXPERIMENTS, list_experiments, main, run_experiment
from bundlelab.errors import ConfigError

REQUIRED = ["hopf-periods", "blowup-divisor", "linking", "transition-degree", "montgomery", "rigidity", "bochner",
            "straighten", "thurston-sweep", "thurston-closure"]


def run_cli(tmp_path, *args):
    report = tmp_path / "report.json"
    code = main([*args, "--report", str(report)])
    return code, (json.loads(report.read_text()) if report.exists() else None), report


def test_list_experiments_covers_required_and_is_stable(capsys):
    assert main(["list-experiments"]) == 0
    first = capsys.readouterr().out
    assert main(["list-experiments"]) == 0
    assert capsys.readouterr().out == first
    names = [line.split()[0] for line in first.splitlines()]
    assert names == sorted(names)
    for name in REQUIRED:
        assert name in names
    assert first.strip() == list_experiments()


def test_report_fields_and_sorted_keys(tmp_path):
    code, rep, path = run_cli(tmp_path, "straighten", "--n", "8", "--seed", "4")
    assert code == 0
    assert {"experiment", "params", "metrics", "pass", "seed", "wall_time"} <= set(rep)
    assert rep["experiment"] == "straighten" and rep["seed"] == 4 and rep["pass"] is True
    assert rep["params"]["n"] == 8
    text = path.read_text()
    assert text == json.dumps(json.loads(text), sort_keys=True, indent=2) + "\n"


def test_reports_are_deterministic(tmp_path):
    reps = []
    for k in range(2):
        d = tmp_path / str(k)
        d.mkdir()
        _, rep, _ = run_cli(d, "hopf-periods", "--n", "3", "--seed", "7")
        rep.pop("wall_time")
        reps.append(json.dumps(rep, sort_keys=True))
    assert reps[0] == reps[1]
    _, other, _ = run_cli(tmp_path, "hopf-periods", "--n", "3", "--seed", "8")
    other.pop("wall_time")
    assert json.dumps(other, sort_keys=True) != reps[0]


def test_exit_code_on_failed_check(tmp_path):
    # a 5% ratio error near lam = 0.5 leaves a defect below the 0.05 detection threshold
    code, rep, _ = run_cli(tmp_path, "thurston-sweep", "--lmin", "0.5", "--lmax", "0.6", "--step", "0.05",
                           "--ratio-factor", "1.05")
    assert code == 1
    assert rep["pass"] is False and rep["metrics"]["min_off_ratio_defect"] < 0.05


@pytest.mark.parametrize("args", [
    ["straighten", "--tol", "-1"],
    ["straighten", "--n", "abc"],
    ["hopf-periods", "--n", "0"],
    ["thurston-closure", "--lambda", "-1"],
    ["rigidity", "--perturbation", "nonexistent"],
])
def test_exit_code_on_bad_config(tmp_path, args):
    code, rep, _ = run_cli(tmp_path, *args)
    assert code == 2 and rep is None


def test_unreadable_config_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["straighten", "--config", str(bad)]) == 2
    assert main(["straighten", "--config", str(tmp_path / "missing.json")]) == 2


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 6, "epsilon": 0.05, "seed": 3}))
    _, rep, _ = run_cli(tmp_path, "straighten", "--config", str(cfg))
    assert rep["params"]["n"] == 6 and rep["params"]["epsilon"] == 0.05 and rep["seed"] == 3
    _, rep, _ = run_cli(tmp_path, "straighten", "--config", str(cfg), "--n", "4", "--seed", "9")
    assert rep["params"]["n"] == 4 and rep["params"]["epsilon"] == 0.05 and rep["seed"] == 9


def test_list_valued_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"Es": [1, 3]}))
    code, rep, _ = run_cli(tmp_path, "transition-degree", "--config", str(cfg))
    assert code == 0 and rep["params"]["Es"] == [1, 3]


def test_sweep_csv(tmp_path):
    out = tmp_path / "sweep.csv"
    code, _, _ = run_cli(tmp_path, "thurston-sweep", "--lmin", "0.5", "--lmax", "1.0", "--step", "0.25",
                         "--csv", str(out))
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["lambda", "alpha1", "alpha2", "geometric_phase", "dynamical_phase", "closure_defect",
                       "k_detected"]
    assert [float(r[0]) for r in rows[1:]] == [0.5, 0.75, 1.0]


def test_trajectory_csv(tmp_path):
    out = tmp_path / "traj.csv"
    code, _, _ = run_cli(tmp_path, "hopf-periods", "--n", "2", "--csv", str(out))
    assert code == 0
    files = sorted(tmp_path.glob("traj*.csv"))
    assert len(files) == 2
    header = next(csv.reader(files[0].open()))
    assert header == ["time", "chart", "c1", "c2", "c3"]


def test_rigidity_report_fields(tmp_path):
    code, rep, _ = run_cli(tmp_path, "rigidity", "--epsilon", "0.05", "--E", "1", "--perturbation", "radial",
                           "--points", "2", "--times", "2", "--equivariance-samples", "2")
    assert code == 0
    for key in ("E", "epsilon", "tolerance", "max_residual", "n_samples", "pass"):
        assert key in rep
    assert rep["E"] == 1 and rep["epsilon"] == 0.05 and rep["n_samples"] == 4
    assert rep["max_residual"] < 1e-5


def test_run_experiment_rejects_unknown():
    with pytest.raises(ConfigError):
        run_experiment("no-such-thing", {})


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "bundlelab", "list-experiments"], capture_output=True, text=True)
    assert out.returncode == 0 and "hopf-periods" in out.stdout


# every operation of every module is exercised by at least one experiment
OPERATIONS = {
    "geometry": ["stereo_north", "stereo_inverse", "blowup_chart_transition", "sigma"],
    "flow": ["integrate", "minimal_period", "return_map", "winding_count"],
    "hopf": ["hopf_field", "local_model_field", "quasi_section_defect", "make_tangent_perturbation",
             "straighten_seifert_curve"],
    "blowup": ["lift_field", "divisor_field", "strict_transform_section", "transversality", "linking_number",
               "transition_degree"],
    "rigidity": ["period_function", "isochronize", "montgomery_check", "build_conjugacy", "equivariance_check",
                 "bochner_linearize", "suspend_conjugacy"],
    "thurston": ["drift_field", "thurston_field", "geometric_phase", "dynamical_phase", "closure_defect",
                 "heis_reduce", "alpha_profile"],
}

CHEAP = {
    "hopf-periods": {"n": 2},
    "blowup-divisor": {"Es": (1,)},
    "blowdown": {"n": 6, "Es": (1,)},
    "transversality": {"n": 6, "Es": (1,)},
    "linking": {"Es": (1,)},
    "transition-degree": {"Es": (2,)},
    "montgomery": {"Es": (1,), "epsilons": (0.05,), "n": 2},
    "rigidity": {"seeds": ("radial",), "epsilons": (0.05,), "n_points": 1, "n_times": 1, "n_equiv": 1},
    "bochner": {"ls": (2,), "grid": 4},
    "straighten": {"n": 4},
    "thurston-phases": {"lams": (1.0,)},
    "thurston-sweep": {"lmin": 1.0, "lmax": 1.1, "step": 0.1},
    "thurston-closure": {},
    "integrator-order": {"n": 1},
}


@pytest.mark.slow
def test_every_operation_reachable_from_an_experiment():
    assert set(CHEAP) == set(EXPERIMENTS)
    called = set()

    def prof(frame, event, arg):
        if event == "call" and "bundlelab" in frame.f_code.co_filename:
            mod = frame.f_code.co_filename.rsplit("/", 1)[-1][:-3]
            called.add((mod, frame.f_code.co_name))

    sys.setprofile(prof)
    try:
        for name, params in CHEAP.items():
            run_experiment(name, params, 0)
    finally:
        sys.setprofile(None)
    missing = [(m, op) for m, ops in OPERATIONS.items() for op in ops if (m, op) not in called]
    assert not missing
