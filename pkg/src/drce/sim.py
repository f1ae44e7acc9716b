"""Closed-loop Monte Carlo harness: true-distribution samplers, nominal-model
construction from samples, baselines, guaranteed-cost bound, and the
concentration-based radius rule.

Per-run randomness comes from a counter-based Philox generator keyed by
base_seed XOR run_id, with one jumped stream per uncertainty source, so runs
are reproducible and order-independent under parallel execution.
"""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import drkf
from .matops import psd_sqrt, symmetrize
from .model import (DistributionSpec, LinearSystem, NominalModel,
                    RobustnessConfig, TrueDistributionSpec)
from .riccati import RiccatiSolution, lqg_backward_pass
from .worstcase import InitSolution, OfflineSchedule, StageSdpSolution

METHODS = ("wdrce", "wdrc", "lqg")


class EmptySampleSet(ValueError):
    pass


class CaseGap(ValueError):
    """Radius rule case not covered: a_j in (1/(log 3)^2, 1] with n_j = 4."""


# -- samplers ----------------------------------------------------------------

def sample_uquadratic(a, b, u):
    """Inverse-CDF sample of the U-Quadratic distribution on [a, b].

    Density is proportional to (x - (a+b)/2)^2; u is uniform(0,1) and may be
    an array (applied coordinatewise against broadcast a, b).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    u = np.asarray(u, dtype=float)
    alpha = 12.0 / (b - a) ** 3
    beta = 0.5 * (a + b)
    return beta + np.cbrt(3.0 * u / alpha - (beta - a) ** 3)


class _DistSampler:
    """Draws from a DistributionSpec; caches the covariance factor."""

    def __init__(self, spec: DistributionSpec):
        self.spec = spec
        if spec.kind == "gaussian":
            self._root = psd_sqrt(spec.cov)

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        if self.spec.kind == "gaussian":
            return self.spec.mean + self._root @ rng.standard_normal(self.spec.dim)
        u = rng.random(self.spec.dim)
        return sample_uquadratic(self.spec.a, self.spec.b, u)


def _run_streams(seed: int):
    """Independent per-source generators for one simulation run."""
    root = np.random.Philox(key=seed)
    return tuple(np.random.Generator(root.jumped(k)) for k in (1, 2, 3))


# -- nominal construction ----------------------------------------------------

def empirical_moments(samples, jitter: float = 0.0):
    """Mean and 1/N-normalized covariance of a sample set (rows = samples).

    The 1/N normalization matches the moments of the empirical (Dirac
    mixture) measure. jitter*I is added to the covariance; noise nominals use
    this to stay positive definite.
    """
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    if X.shape[0] == 0:
        raise EmptySampleSet("need at least one sample")
    mean = X.mean(axis=0)
    D = X - mean
    cov = (D.T @ D) / X.shape[0] + jitter * np.eye(X.shape[1])
    return mean, symmetrize(cov)


V_COV_JITTER = 1e-6


def nominal_from_samples(w_samples, v_samples, x0_samples) -> NominalModel:
    """Empirical nominal model from per-stage sample sets.

    w_samples, v_samples: sequences of (N, dim) arrays, one per stage;
    x0_samples: one (N, n_x) array. The noise covariance gets a 1e-6 I jitter
    so the filter's innovation stays invertible.
    """
    w_moments = [empirical_moments(s) for s in w_samples]
    v_moments = [empirical_moments(s, jitter=V_COV_JITTER) for s in v_samples]
    x0_mean, x0_cov = empirical_moments(x0_samples)
    return NominalModel(
        w_mean=np.stack([m for m, _ in w_moments]),
        w_cov=np.stack([c for _, c in w_moments]),
        v_mean=np.stack([m for m, _ in v_moments]),
        v_cov=np.stack([c for _, c in v_moments]),
        x0_mean=x0_mean,
        x0_cov=x0_cov,
    )


def nominal_from_true(system: LinearSystem, true_dists: TrueDistributionSpec,
                      n_samples: dict, seed: int) -> NominalModel:
    """Draw i.i.d. datasets from the true distributions and take empirical moments."""
    T = system.T
    w_s, v_s, x0_s = (_DistSampler(true_dists.w), _DistSampler(true_dists.v),
                      _DistSampler(true_dists.x0))
    rng_w, rng_v, rng_x0 = _run_streams(seed)
    w_sets = [np.stack([w_s.draw(rng_w) for _ in range(n_samples["w"])]) for _ in range(T)]
    v_sets = [np.stack([v_s.draw(rng_v) for _ in range(n_samples["v"])]) for _ in range(T)]
    x0_set = np.stack([x0_s.draw(rng_x0) for _ in range(n_samples["x0"])])
    return nominal_from_samples(w_sets, v_sets, x0_set)


def exact_nominal(system: LinearSystem, true_dists: TrueDistributionSpec) -> NominalModel:
    """Nominal model equal to the true moments (no sampling error)."""
    w_mean, w_cov = true_dists.w.moments()
    v_mean, v_cov = true_dists.v.moments()
    x0_mean, x0_cov = true_dists.x0.moments()
    return NominalModel.stationary(system.T, w_mean, w_cov, v_mean, v_cov, x0_mean, x0_cov)


def mean_shifted_truth(nominal: NominalModel, delta_w: np.ndarray) -> TrueDistributionSpec:
    """Gaussian truth at the nominal moments with the disturbance mean shifted.

    The Gelbrich distance to the nominal then equals ||delta_w||, giving a
    constructible ambiguity-set membership certificate.
    """
    delta_w = np.asarray(delta_w, dtype=float).ravel()
    return TrueDistributionSpec(
        w=DistributionSpec(kind="gaussian", mean=nominal.w_mean[0] + delta_w,
                           cov=nominal.w_cov[0]),
        v=DistributionSpec(kind="gaussian", mean=nominal.v_mean[0], cov=nominal.v_cov[0]),
        x0=DistributionSpec(kind="gaussian", mean=nominal.x0_mean, cov=nominal.x0_cov),
    )


# -- baselines ----------------------------------------------------------------

def _kf_posterior(prior, C, v_cov):
    innov = symmetrize(C @ prior @ C.T + v_cov)
    return symmetrize(prior - prior @ C.T @ np.linalg.solve(innov, C @ prior))


def nominal_schedule(system: LinearSystem, nominal: NominalModel,
                     riccati: RiccatiSolution | None = None) -> OfflineSchedule:
    """Schedule for the classical LQG baseline: LQG Riccati gains, nominal
    Kalman covariance recursion, nominal-mean predictions (H=0, G=w_hat)."""
    rc = riccati if riccati is not None else lqg_backward_pass(system, nominal)
    C, T = system.C, system.T
    prior = symmetrize(nominal.x0_cov)
    post = _kf_posterior(prior, C, nominal.v_cov[0])
    init = InitSolution(sigma_x_prior=prior, sigma_x_post=post,
                        sigma_v=nominal.v_cov[0].copy(), Y=nominal.x0_cov.copy(),
                        Z=nominal.v_cov[0].copy(),
                        objective=float(np.trace(rc.S[0] @ post)), gap=0.0)
    stages = []
    for t in range(T):
        w_cov = nominal.w_cov[t]
        v_next = nominal.v_cov[min(t + 1, T - 1)]
        prior = symmetrize(system.A @ post @ system.A.T + w_cov)
        post = _kf_posterior(prior, C, v_next)
        stages.append(StageSdpSolution(
            t=t, sigma_x_prior=prior, sigma_x_post=post, sigma_w=w_cov.copy(),
            sigma_v=v_next.copy(), Y=w_cov.copy(), Z=v_next.copy(),
            objective=0.0, gap=0.0))
    cfg = RobustnessConfig(theta_w=0.0, theta_v=0.0, theta_x0=0.0, lambda_=float("inf"))
    return OfflineSchedule(system=system, nominal=nominal, cfg=cfg, riccati=rc,
                           init=init, stages=tuple(stages), bound_value=float("nan"))


# -- closed loop ---------------------------------------------------------------

@dataclass
class RunResult:
    run_id: int
    total_cost: float
    method: str
    seed: int
    wall_time_ms: float
    states: np.ndarray | None = None
    estimates: np.ndarray | None = None
    controls: np.ndarray | None = None


def run_closed_loop(system: LinearSystem, schedule: OfflineSchedule,
                    true_dists: TrueDistributionSpec, rng_seed: int,
                    method: str = "wdrce", gains: drkf.FilterGains | None = None,
                    collect_logs: bool = False, run_id: int = 0) -> RunResult:
    """Simulate one closed-loop trajectory and return its quadratic cost."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    t0 = time.perf_counter()
    A, B, C = system.A, system.B, system.C
    Q, Qf, R = system.Q, system.Qf, system.R
    T = system.T

    rng_w, rng_v, rng_x0 = _run_streams(rng_seed)
    w_s, v_s, x0_s = (_DistSampler(true_dists.w), _DistSampler(true_dists.v),
                      _DistSampler(true_dists.x0))
    if gains is None:
        gains = drkf.FilterGains(schedule)

    x = x0_s.draw(rng_x0)
    state = drkf.initial_state(schedule)
    cost = 0.0
    states = np.zeros((T + 1, system.n_x)) if collect_logs else None
    estimates = np.zeros((T, system.n_x)) if collect_logs else None
    controls = np.zeros((T, system.n_u)) if collect_logs else None

    for t in range(T):
        y = C @ x + v_s.draw(rng_v)
        state = drkf.measurement_update(state, y, schedule, gains)
        u = drkf.control(state, schedule)
        cost += float(x @ Q @ x) + float(u @ R @ u)
        if collect_logs:
            states[t] = x
            estimates[t] = state.x_post_mean
            controls[t] = u
        x = A @ x + B @ u + w_s.draw(rng_w)
        state = drkf.predict(state, u, schedule)

    cost += float(x @ Qf @ x)
    if collect_logs:
        states[T] = x
    return RunResult(run_id=run_id, total_cost=cost, method=method, seed=rng_seed,
                     wall_time_ms=(time.perf_counter() - t0) * 1e3,
                     states=states, estimates=estimates, controls=controls)


@dataclass
class MonteCarloSummary:
    method: str
    n_runs: int
    base_seed: int
    mean: float
    std: float
    stderr: float
    quantiles: dict[str, float]
    costs: np.ndarray = field(repr=False)
    wall_time_ms: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "n_runs": self.n_runs,
            "base_seed": self.base_seed,
            "mean": self.mean,
            "std": self.std,
            "stderr": self.stderr,
            "quantiles": self.quantiles,
        }


def resolve_workers(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("DRCE_THREADS")
    return max(1, int(env)) if env else 1


QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)


def monte_carlo(system: LinearSystem, schedule: OfflineSchedule,
                true_dists: TrueDistributionSpec, method: str,
                n_runs: int, base_seed: int,
                workers: int | None = None) -> MonteCarloSummary:
    """Independent closed-loop runs with per-run seed = base_seed XOR run_id.

    Deterministic given base_seed; results are written into a run-indexed
    array, so thread scheduling cannot change the summary.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    gains = drkf.FilterGains(schedule)
    costs = np.zeros(n_runs)
    walls = np.zeros(n_runs)

    def one(i: int):
        res = run_closed_loop(system, schedule, true_dists, base_seed ^ i,
                              method=method, gains=gains, run_id=i)
        costs[i] = res.total_cost
        walls[i] = res.wall_time_ms

    n_workers = resolve_workers(workers)
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as ex:
            list(ex.map(one, range(n_runs)))
    else:
        for i in range(n_runs):
            one(i)

    return MonteCarloSummary(
        method=method, n_runs=n_runs, base_seed=base_seed,
        mean=float(costs.mean()),
        std=float(costs.std(ddof=1)) if n_runs > 1 else 0.0,
        stderr=float(costs.std(ddof=1) / np.sqrt(n_runs)) if n_runs > 1 else 0.0,
        quantiles={f"q{int(100 * q):02d}": float(np.quantile(costs, q)) for q in QUANTILES},
        costs=costs, wall_time_ms=walls)


def guaranteed_bound(schedule: OfflineSchedule, theta_w: float) -> float:
    """Upper bound on the true cost for any in-set disturbance policy."""
    return schedule.bound_value + schedule.cfg.lambda_ * theta_w**2 * schedule.T


# -- radius rule ---------------------------------------------------------------

@dataclass(frozen=True)
class SourceTailParams:
    """Concentration constants for one uncertainty source (documented
    hypotheses on the true distribution's tail; not verifiable here)."""

    n: int
    c1: float = 1.0
    c2: float = 1.0
    c: float = 3.0


@dataclass(frozen=True)
class RadiusSelectionParams:
    beta: float
    N: int
    T: int
    sources: dict[str, SourceTailParams]

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must be in (0,1)")
        for name, s in self.sources.items():
            if s.c <= 2:
                raise ValueError(f"{name}: tail exponent c must exceed 2")
            if s.c1 <= 0 or s.c2 <= 0:
                raise ValueError(f"{name}: c1, c2 must be positive")


_LOG3 = np.log(3.0)


def _theta_bar(sqrt_a: float) -> float:
    """Solve theta / log(2 + 1/theta) = sqrt(a) by bisection to 1e-10."""
    g = lambda th: th / np.log(2.0 + 1.0 / th)
    lo, hi = 0.0, 10.0 * sqrt_a * _LOG3
    while g(hi) < sqrt_a:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-10:
            break
        if g(mid) < sqrt_a:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def radius_from_concentration(a: float, n: int, c: float) -> float:
    """Apply the four-case radius rule to a precomputed exponent a."""
    if a > 1.0:
        return a ** (2.0 / c)
    if n < 4:
        return np.sqrt(a)
    if n > 4:
        return a ** (2.0 / n)
    if a <= 1.0 / _LOG3**2:
        return _theta_bar(np.sqrt(a))
    raise CaseGap(
        f"radius rule undefined for n=4 with a={a:.6g} in (1/(log 3)^2, 1]")


def select_radius(params: RadiusSelectionParams) -> dict[str, float]:
    """Per-source ambiguity radius delivering the 1-beta out-of-sample guarantee."""
    tail = 1.0 - (1.0 - params.beta) ** (1.0 / (2.0 * params.T + 1.0))
    out = {}
    for name, s in params.sources.items():
        a = np.log(s.c1 / tail) / (s.c2 * params.N)
        out[name] = radius_from_concentration(float(a), s.n, s.c)
    return out


# -- result emission ------------------------------------------------------------

CSV_HEADER = ["method", "theta_w", "theta_v", "theta_x0", "lambda",
              "run_id", "seed", "total_cost", "wall_time_ms"]


def write_runs_csv(path, rows: list[dict]):
    """Emit per-run results with the fixed column contract."""
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CSV_HEADER)
        w.writeheader()
        for row in rows:
            w.writerow({k: row[k] for k in CSV_HEADER})


def runs_rows(summary: MonteCarloSummary, cfg: RobustnessConfig) -> list[dict]:
    return [
        {
            "method": summary.method,
            "theta_w": cfg.theta_w,
            "theta_v": cfg.theta_v,
            "theta_x0": cfg.theta_x0,
            "lambda": cfg.lambda_,
            "run_id": i,
            "seed": summary.base_seed ^ i,
            "total_cost": summary.costs[i],
            "wall_time_ms": summary.wall_time_ms[i],
        }
        for i in range(summary.n_runs)
    ]


def write_summary_json(path, cells: list[dict], extra: dict | None = None):
    doc = {"format": "drce-summary", "version": 1, "cells": cells}
    if extra:
        doc.update(extra)
    with open(path, "w") as f:
        json.dump(doc, f, sort_keys=True, indent=1)
