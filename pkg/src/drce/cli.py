"""Command-line entry point: offline synthesis, simulation campaigns, verification.

Exit codes: 0 ok, 1 verification failure, 2 config error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import model, riccati, sim, systems, worstcase
from .conic import SolverFailure
from .model import (LinearSystem, NominalModel, RobustnessConfig,
                    TrueDistributionSpec)

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Parsed experiment description (see README for the YAML schema)."""

    system: LinearSystem
    true_dists: TrueDistributionSpec | None
    nominal_source: str                 # explicit | samples | from_true | exact
    nominal: NominalModel | None
    n_samples: dict
    nominal_seed: int
    theta_w_grid: list[float]
    theta_v_grid: list[float]
    theta_x0: float
    lambda_mode: str                    # fixed | select
    lambda_value: float | None
    n_runs: int
    base_seed: int
    methods: list[str]
    tol: float
    out_dir: Path
    sample_paths: dict = field(default_factory=dict)

    def resolve_nominal(self) -> NominalModel:
        if self.nominal is not None:
            return self.nominal
        if self.nominal_source == "exact":
            if self.true_dists is None:
                raise ConfigError("nominal source 'exact' needs true_distributions")
            nom = sim.exact_nominal(self.system, self.true_dists)
        elif self.nominal_source == "from_true":
            if self.true_dists is None:
                raise ConfigError("nominal source 'from_true' needs true_distributions")
            nom = sim.nominal_from_true(self.system, self.true_dists,
                                        self.n_samples, self.nominal_seed)
        elif self.nominal_source == "samples":
            nom = _nominal_from_paths(self.system, self.sample_paths)
        else:
            raise ConfigError(f"unknown nominal source {self.nominal_source!r}")
        self.nominal = nom
        return nom


def _nominal_from_paths(system: LinearSystem, paths: dict) -> NominalModel:
    def load(path):
        arr = np.load(path) if str(path).endswith(".npy") else np.asarray(
            json.loads(Path(path).read_text()), dtype=float)
        return arr

    def per_stage(arr, T):
        if arr.ndim == 2:
            return [arr] * T
        if arr.ndim == 3:
            if arr.shape[0] != T:
                raise ConfigError(f"per-stage sample array has {arr.shape[0]} stages, expected {T}")
            return list(arr)
        raise ConfigError("sample arrays must be (N, dim) or (T, N, dim)")

    try:
        w = per_stage(load(paths["w"]), system.T)
        v = per_stage(load(paths["v"]), system.T)
        x0 = load(paths["x0"])
    except KeyError as e:
        raise ConfigError(f"sample path missing for source {e}") from e
    return sim.nominal_from_samples(w, v, x0)


def _dist_from_cfg(d: dict, dim: int) -> model.DistributionSpec:
    kind = d.get("kind")
    if kind == "gaussian":
        mean = np.asarray(d["mean"], dtype=float)
        if mean.ndim == 0:
            mean = np.full(dim, float(mean))
        cov = np.asarray(d["cov"], dtype=float)
        if cov.ndim == 0:
            cov = float(cov) * np.eye(dim)
        return model.DistributionSpec(kind="gaussian", mean=mean, cov=cov)
    if kind == "uquadratic":
        a = np.asarray(d["a"], dtype=float)
        b = np.asarray(d["b"], dtype=float)
        if a.ndim == 0:
            a = np.full(dim, float(a))
        if b.ndim == 0:
            b = np.full(dim, float(b))
        return model.DistributionSpec(kind="uquadratic", a=a, b=b)
    raise ConfigError(f"unknown distribution kind {kind!r}")


def load_experiment(path, overrides: argparse.Namespace | None = None) -> ExperimentConfig:
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e

    sys_cfg = doc.get("system", {})
    if "builtin" in sys_cfg:
        system = systems.builtin_system(sys_cfg["builtin"], T=int(sys_cfg.get("horizon", 20)))
    else:
        try:
            system = LinearSystem.from_dict(sys_cfg)
        except (KeyError, ValueError) as e:
            raise ConfigError(f"bad system block: {e}") from e

    true_dists = None
    if "true_distributions" in doc:
        td = doc["true_distributions"]
        true_dists = TrueDistributionSpec(
            w=_dist_from_cfg(td["w"], system.n_x),
            v=_dist_from_cfg(td["v"], system.n_y),
            x0=_dist_from_cfg(td["x0"], system.n_x),
        )

    nom_cfg = doc.get("nominal", {"source": "exact"})
    nominal = None
    if nom_cfg.get("source") == "explicit":
        nominal = NominalModel.from_dict(nom_cfg["model"])
    n_samples = {k: int(v) for k, v in nom_cfg.get("n_samples", {"w": 15, "v": 15, "x0": 15}).items()}

    rob = doc.get("robustness", {})
    lam_cfg = rob.get("lambda", {"mode": "fixed", "value": 1e9})
    simu = doc.get("simulation", {})

    cfg = ExperimentConfig(
        system=system,
        true_dists=true_dists,
        nominal_source=nom_cfg.get("source", "exact"),
        nominal=nominal,
        n_samples=n_samples,
        nominal_seed=int(nom_cfg.get("seed", 0)),
        theta_w_grid=[float(x) for x in rob.get("theta_w_grid", [rob.get("theta_w", 0.0)])],
        theta_v_grid=[float(x) for x in rob.get("theta_v_grid", [rob.get("theta_v", 0.0)])],
        theta_x0=float(rob.get("theta_x0", 0.0)),
        lambda_mode=lam_cfg.get("mode", "fixed"),
        lambda_value=float(lam_cfg["value"]) if "value" in lam_cfg else None,
        n_runs=int(simu.get("n_runs", 100)),
        base_seed=int(simu.get("base_seed", 0)),
        methods=list(simu.get("methods", ["wdrce"])),
        tol=float(doc.get("solver", {}).get("tol", 1e-3)),
        out_dir=Path(doc.get("output_dir", ".")),
        sample_paths=nom_cfg.get("paths", {}),
    )

    if overrides is not None:
        if getattr(overrides, "tol", None) is not None:
            cfg.tol = overrides.tol
        if getattr(overrides, "runs", None) is not None:
            cfg.n_runs = overrides.runs
        if getattr(overrides, "seed", None) is not None:
            cfg.base_seed = overrides.seed
        if getattr(overrides, "method", None):
            cfg.methods = list(overrides.method)
        if getattr(overrides, "out", None) is not None:
            cfg.out_dir = Path(overrides.out)
        if getattr(overrides, "grid_theta_w", None):
            cfg.theta_w_grid = [float(x) for x in overrides.grid_theta_w]
        if getattr(overrides, "grid_theta_v", None):
            cfg.theta_v_grid = [float(x) for x in overrides.grid_theta_v]

    if not cfg.theta_w_grid or not cfg.theta_v_grid:
        raise ConfigError("theta grids must be nonempty")
    if cfg.n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    for m in cfg.methods:
        if m not in sim.METHODS:
            raise ConfigError(f"unknown method {m!r}")
    return cfg


def schedule_name(method: str, iw: int, jv: int) -> str:
    return f"schedule_{method}_tw{iw}_tv{jv}.json" if method == "wdrce" \
        else f"schedule_{method}_tw{iw}.json"


def _resolve_lambda(cfg: ExperimentConfig, nominal: NominalModel,
                    theta_w: float, theta_v: float, theta_x0: float) -> float:
    if cfg.lambda_mode == "fixed":
        if cfg.lambda_value is None:
            raise ConfigError("lambda mode 'fixed' needs a value")
        return cfg.lambda_value
    if cfg.lambda_mode != "select":
        raise ConfigError(f"unknown lambda mode {cfg.lambda_mode!r}")

    def bound_at(lam: float) -> float:
        rc = riccati.backward_pass(cfg.system, nominal, lam)
        rob = RobustnessConfig(theta_w=theta_w, theta_v=theta_v,
                               theta_x0=theta_x0, lambda_=lam)
        return worstcase.forward_pass(rc, nominal, rob, cfg.system, tol=cfg.tol).bound_value

    return riccati.lambda_select(cfg.system, nominal, theta_w, bound_at)


def cmd_offline(cfg: ExperimentConfig) -> int:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    nominal = cfg.resolve_nominal()
    violations = model.validate(cfg.system, nominal,
                                RobustnessConfig(cfg.theta_w_grid[0], cfg.theta_v_grid[0],
                                                 cfg.theta_x0, cfg.lambda_value or 1.0))
    if violations:
        for v in violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_CONFIG

    timings = {"T": cfg.system.T, "cells": []}
    want_wdrc = "wdrc" in cfg.methods
    for iw, theta_w in enumerate(cfg.theta_w_grid):
        for jv, theta_v in enumerate(cfg.theta_v_grid):
            lam = _resolve_lambda(cfg, nominal, theta_w, theta_v, cfg.theta_x0)
            rob = RobustnessConfig(theta_w=theta_w, theta_v=theta_v,
                                   theta_x0=cfg.theta_x0, lambda_=lam)
            t0 = time.perf_counter()
            rc = riccati.backward_pass(cfg.system, nominal, lam)
            schedule = worstcase.forward_pass(rc, nominal, rob, cfg.system, tol=cfg.tol)
            elapsed = time.perf_counter() - t0
            path = cfg.out_dir / schedule_name("wdrce", iw, jv)
            worstcase.save_schedule(schedule, path)
            timings["cells"].append({"method": "wdrce", "theta_w": theta_w,
                                     "theta_v": theta_v, "lambda": lam,
                                     "synthesis_s": elapsed, "file": path.name})
            print(f"wrote {path} (lambda={lam:.6g}, {elapsed:.2f}s)")
        if want_wdrc:
            lam = _resolve_lambda(cfg, nominal, theta_w, 0.0, 0.0)
            rob = RobustnessConfig(theta_w=theta_w, theta_v=0.0, theta_x0=0.0, lambda_=lam)
            t0 = time.perf_counter()
            rc = riccati.backward_pass(cfg.system, nominal, lam)
            schedule = worstcase.forward_pass(rc, nominal, rob, cfg.system, tol=cfg.tol)
            elapsed = time.perf_counter() - t0
            path = cfg.out_dir / schedule_name("wdrc", iw, 0)
            worstcase.save_schedule(schedule, path)
            timings["cells"].append({"method": "wdrc", "theta_w": theta_w,
                                     "theta_v": 0.0, "lambda": lam,
                                     "synthesis_s": elapsed, "file": path.name})
            print(f"wrote {path} (lambda={lam:.6g}, {elapsed:.2f}s)")

    with open(cfg.out_dir / "timings.json", "w") as f:
        json.dump(timings, f, indent=1, sort_keys=True)
    return EXIT_OK


def cmd_simulate(cfg: ExperimentConfig) -> int:
    if cfg.true_dists is None:
        print("config error: simulation needs true_distributions", file=sys.stderr)
        return EXIT_CONFIG
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    nominal = cfg.resolve_nominal()

    rows: list[dict] = []
    cells: list[dict] = []
    for method in cfg.methods:
        if method == "lqg":
            schedule = sim.nominal_schedule(cfg.system, nominal)
            summary = sim.monte_carlo(cfg.system, schedule, cfg.true_dists, "lqg",
                                      cfg.n_runs, cfg.base_seed)
            rows += sim.runs_rows(summary, schedule.cfg)
            cells.append({**summary.to_dict(), "theta_w": 0.0, "theta_v": 0.0,
                          "theta_x0": 0.0, "lambda": None})
            continue
        for iw, theta_w in enumerate(cfg.theta_w_grid):
            jvs = range(len(cfg.theta_v_grid)) if method == "wdrce" else [0]
            for jv in jvs:
                path = cfg.out_dir / schedule_name(method, iw, jv)
                if not path.exists():
                    print(f"missing schedule {path} (run `drce offline` first)", file=sys.stderr)
                    return EXIT_CONFIG
                schedule = worstcase.load_schedule(path)
                summary = sim.monte_carlo(cfg.system, schedule, cfg.true_dists, method,
                                          cfg.n_runs, cfg.base_seed)
                rows += sim.runs_rows(summary, schedule.cfg)
                cells.append({**summary.to_dict(),
                              "theta_w": schedule.cfg.theta_w,
                              "theta_v": schedule.cfg.theta_v,
                              "theta_x0": schedule.cfg.theta_x0,
                              "lambda": schedule.cfg.lambda_,
                              "guaranteed_bound": sim.guaranteed_bound(
                                  schedule, schedule.cfg.theta_w)})

    sim.write_runs_csv(cfg.out_dir / "runs.csv", rows)
    extra = {}
    timing_path = cfg.out_dir / "timings.json"
    if timing_path.exists():
        extra["offline_times"] = json.loads(timing_path.read_text())
    sim.write_summary_json(cfg.out_dir / "summary.json", cells, extra)
    print(f"wrote {cfg.out_dir / 'runs.csv'} and {cfg.out_dir / 'summary.json'}")
    return EXIT_OK


def cmd_verify(path, tol: float) -> int:
    try:
        schedule = worstcase.load_schedule(path)
    except (OSError, worstcase.ScheduleFormatError) as e:
        print(f"cannot load schedule: {e}", file=sys.stderr)
        return EXIT_CONFIG
    reports = worstcase.verify_schedule(schedule, tol=tol)
    ok = True
    for idx, rep in enumerate(reports):
        label = "init" if idx == 0 else f"stage {idx - 1}"
        if rep.passed:
            print(f"{label}: ok")
        else:
            ok = False
            for name, check_ok, value in rep.checks:
                if not check_ok:
                    print(f"{label}: FAIL {name} (value {value:.3e})")
    return EXIT_OK if ok else EXIT_VERIFY


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="drce",
                                     description="Distributionally robust control and estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True)
    common.add_argument("--out", default=None)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--runs", type=int, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--method", action="append", choices=sim.METHODS)
    common.add_argument("--grid-theta-w", nargs="+", type=float, dest="grid_theta_w")
    common.add_argument("--grid-theta-v", nargs="+", type=float, dest="grid_theta_v")

    sub.add_parser("offline", parents=[common], help="synthesize schedules per grid cell")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo campaign over schedules")

    pv = sub.add_parser("verify", help="audit a schedule file")
    pv.add_argument("schedule")
    pv.add_argument("--tol", type=float, default=1e-3)

    args = parser.parse_args(argv)

    try:
        if args.command == "verify":
            return cmd_verify(args.schedule, args.tol)
        cfg = load_experiment(args.config, overrides=args)
        if args.command == "offline":
            return cmd_offline(cfg)
        return cmd_simulate(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverFailure, worstcase.AssumptionViolated, riccati.RiccatiError) as e:
        print(f"solver error: {e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
