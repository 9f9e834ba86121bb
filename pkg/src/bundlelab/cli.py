"""Command line driver: ``bundlelab <experiment> [options]``.

Each run writes a JSON report with the fields experiment, params, metrics,
pass, seed and wall_time (keys sorted, so identical inputs give identical
reports apart from wall_time).  Random sampling uses numpy's PCG64 generator
seeded with ``--seed``.  Exit codes: 0 pass, 1 failed check, 2 bad
configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import experiments as ex
from .errors import ConfigError, ExperimentFailure
from .flow import write_trajectory_csv
from .thurston import write_sweep_csv


def _ints(s):
    return tuple(int(v) for v in str(s).split(",") if v.strip())


def _floats(s):
    return tuple(float(v) for v in str(s).split(",") if v.strip())


def _words(s):
    return tuple(v.strip() for v in str(s).split(",") if v.strip())


@dataclass(frozen=True)
class Option:
    flag: str
    kwarg: str
    parse: object
    default: object
    help: str = ""


@dataclass(frozen=True)
class Experiment:
    name: str
    run: object
    claim: str
    options: tuple = ()
    output: str = ""  # "trajectories", "rows" or ""


def TOL(default):
    return Option("--tol", "tol", float, default, "integrator tolerance")


EXPERIMENTS = {e.name: e for e in [
    Experiment("hopf-periods", ex.run_hopf_periods, "every Hopf orbit has minimal period 2 pi",
               (Option("--n", "n", int, 100, "number of random points on S^3"), TOL(1e-10)), "trajectories"),
    Experiment("blowup-divisor", ex.run_blowup_divisor, "divisor orbits have homotopy type (2E, 1)",
               (Option("--E", "Es", _ints, (1, 2, 3), "Euler numbers, comma separated"), TOL(1e-10)),
               "trajectories"),
    Experiment("blowdown", ex.run_blowdown, "the lifted field pushes down to the original field",
               (Option("--n", "n", int, 1000), Option("--E", "Es", _ints, (1, 2, 3)),
                Option("--epsilon", "epsilon", float, 0.05))),
    Experiment("transversality", ex.run_transversality,
               "the strict-transform section is transverse (eta of the lifted model is -1)",
               (Option("--n", "n", int, 1000), Option("--E", "Es", _ints, (1, 2, 3)),
                Option("--epsilon", "epsilon", float, 0.05), Option("--perturbation", "seed", str, "radial"))),
    Experiment("linking", ex.run_linking, "linking number = transition degree = half divisor winding = E",
               (Option("--E", "Es", _ints, (1, 2, 3)), TOL(1e-10))),
    Experiment("transition-degree", ex.run_transition_degree, "the transition function around the fiber has degree E",
               (Option("--E", "Es", _ints, (1, 2, 3, -1, -2)), Option("--samples", "n_samples", int, 64))),
    Experiment("montgomery", ex.run_montgomery, "the return map to the strict transform has exact period 2E",
               (Option("--E", "Es", _ints, (1, 2, 3)), Option("--epsilon", "epsilons", _floats, (0.0, 0.05)),
                Option("--n", "n", int, 50), Option("--perturbation", "seed", str, "radial"), TOL(1e-9))),
    Experiment("rigidity", ex.run_rigidity, "perturbed isochronous fields are conjugate to the model",
               (Option("--E", "E", int, 1), Option("--epsilon", "epsilons", _floats, (0.01, 0.05)),
                Option("--perturbation", "seeds", _words, ("radial", "mixed", "twist")),
                Option("--points", "n_points", int, 10), Option("--times", "n_times", int, 10),
                Option("--equivariance-samples", "n_equiv", int, 20), TOL(1e-9))),
    Experiment("bochner", ex.run_bochner, "averaging conjugates a periodic disc map to a rotation; suspension",
               (Option("--l", "ls", _ints, (1, 2, 3)), Option("--size", "size", float, 0.05),
                Option("--grid", "grid", int, 32))),
    Experiment("straighten", ex.run_straighten, "a curve of closed leaves can be moved onto the core",
               (Option("--epsilon", "epsilon", float, 0.1), Option("--n", "n", int, 64), TOL(1e-12))),
    Experiment("thurston-phases", ex.run_thurston_phases, "geometric phase pi lam^2 equals the dynamical phase",
               (Option("--lambdas", "lams", _floats, (0.1, 0.5, 1.0, 2.0, 5.0)),)),
    Experiment("thurston-sweep", ex.run_thurston_sweep, "leaves close along the profile alpha2/alpha1 = lam/2",
               (Option("--lmin", "lmin", float, 0.05), Option("--lmax", "lmax", float, 20.0),
                Option("--step", "step", float, 0.05), Option("--ratio-factor", "ratio_factor", float, 1.0),
                TOL(1e-11)), "rows"),
    Experiment("thurston-closure", ex.run_thurston_closure, "closure defect matches the analytic fiber shift",
               (Option("--lambda", "lam", float, 1.0), Option("--ratio", "ratio", float, None),
                Option("--alpha1", "alpha1", float, None), Option("--alpha2", "alpha2", float, None), TOL(1e-12))),
    Experiment("integrator-order", ex.run_integrator_order, "halving tol shrinks the Hopf closure defect 4x",
               (Option("--n", "n", int, 20), TOL(1e-10))),
]}


def list_experiments() -> str:
    width = max(len(n) for n in EXPERIMENTS)
    return "\n".join(f"{n.ljust(width)}  {e.claim}" for n, e in sorted(EXPERIMENTS.items()))


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def _validate(params):
    for k, v in params.items():
        if k == "tol" or k.endswith("_tol"):
            if not v > 0:
                raise ConfigError(f"{k} must be positive, got {v}")
        if k in ("n", "n_points", "n_times", "grid") and v < 1:
            raise ConfigError(f"{k} must be at least 1, got {v}")


def run_experiment(name: str, params: dict, seed: int = 0):
    """Run one experiment; returns (report, outcome).  Raises ConfigError on bad parameters."""
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}")
    _validate(params)
    rng = np.random.Generator(np.random.PCG64(seed))
    t0 = time.perf_counter()
    try:
        out = EXPERIMENTS[name].run(rng, **params)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    report = {"experiment": name, "params": _jsonable(params), "metrics": _jsonable(out.metrics),
              "pass": bool(out.passed), "seed": seed, "wall_time": time.perf_counter() - t0}
    report.update(_jsonable(out.extra))
    return report, out


def dumps(report) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def build_parser():
    p = argparse.ArgumentParser(prog="bundlelab", description="Numerical experiments on circle bundles and flows.")
    sub = p.add_subparsers(dest="experiment", required=True)
    sub.add_parser("list-experiments", help="print the experiments and what each checks")
    for name, e in sorted(EXPERIMENTS.items()):
        sp = sub.add_parser(name, help=e.claim)
        sp.add_argument("--seed", type=int, default=None, help="seed for numpy's PCG64 generator (default 0)")
        sp.add_argument("--config", type=Path, help="JSON file of parameters; flags override it")
        sp.add_argument("--report", type=Path, help="write the JSON report here (default: stdout)")
        if e.output:
            sp.add_argument("--csv", type=Path, help="write trajectories / sweep table as CSV")
        for o in e.options:
            sp.add_argument(o.flag, dest=o.kwarg, type=str, default=None, help=o.help or None)
    return p


def resolve_params(e: Experiment, args, config: dict):
    params, seed = {}, config.get("seed", 0)
    for o in e.options:
        raw = getattr(args, o.kwarg)
        if raw is None:
            raw = config.get(o.kwarg, config.get(o.flag.lstrip("-").replace("-", "_"), o.default))
        if raw is None:
            params[o.kwarg] = None
            continue
        try:
            if isinstance(raw, (list, tuple)) and o.parse in (_ints, _floats, _words):
                raw = ",".join(str(v) for v in raw)
            params[o.kwarg] = o.parse(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {o.flag}: {raw!r}") from exc
    if args.seed is not None:
        seed = args.seed
    return {k: v for k, v in params.items() if v is not None}, int(seed)


def _write_outputs(e: Experiment, out, path: Path):
    if e.output == "rows":
        write_sweep_csv(out.rows, path)
    elif e.output == "trajectories":
        for k, traj in enumerate(out.trajectories):
            target = path if len(out.trajectories) == 1 else path.with_name(f"{path.stem}_{k}{path.suffix}")
            write_trajectory_csv(traj, target)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.experiment == "list-experiments":
        print(list_experiments())
        return 0
    e = EXPERIMENTS[args.experiment]
    try:
        config = json.loads(args.config.read_text()) if args.config else {}
        params, seed = resolve_params(e, args, config)
        report, out = run_experiment(e.name, params, seed)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    text = dumps(report)
    if args.report:
        args.report.write_text(text)
    else:
        sys.stdout.write(text)
    if e.output and getattr(args, "csv", None):
        _write_outputs(e, out, args.csv)
    if not report["pass"]:
        print(str(ExperimentFailure(f"{e.name} failed; see metrics in the report")), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
