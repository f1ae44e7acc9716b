import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from drce import sim
from drce.model import (DistributionSpec, NominalModel, RobustnessConfig,
                        TrueDistributionSpec)
from drce.riccati import backward_pass
from drce.sim import (CaseGap, EmptySampleSet, RadiusSelectionParams,
                      SourceTailParams, empirical_moments, guaranteed_bound,
                      mean_shifted_truth, monte_carlo, nominal_schedule,
                      radius_from_concentration, run_closed_loop,
                      sample_uquadratic, select_radius)
from drce.worstcase import forward_pass


# -- U-Quadratic sampler -------------------------------------------------------

def test_uquadratic_median_is_midpoint():
    assert sample_uquadratic(0.0, 2.0, 0.5) == pytest.approx(1.0, abs=1e-12)


def test_uquadratic_endpoints():
    assert sample_uquadratic(0.0, 2.0, 1.0) == pytest.approx(2.0, abs=1e-12)
    assert sample_uquadratic(0.0, 2.0, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_uquadratic_moments():
    rng = np.random.default_rng(123)
    x = sample_uquadratic(0.0, 2.0, rng.random(10**6))
    assert x.mean() == pytest.approx(1.0, abs=0.01)
    assert x.var() == pytest.approx(3.0 * 4.0 / 20.0, abs=0.01)


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=-5, max_value=5), st.floats(min_value=0.1, max_value=10),
       st.floats(min_value=0, max_value=1))
def test_uquadratic_stays_in_support(a, width, u):
    x = sample_uquadratic(a, a + width, u)
    assert a - 1e-9 <= x <= a + width + 1e-9


def test_uquadratic_ks_statistic():
    a, b = -0.5, 2.5
    alpha = 12.0 / (b - a) ** 3
    beta = 0.5 * (a + b)
    cdf = lambda x: alpha / 3.0 * ((x - beta) ** 3 + (beta - a) ** 3)
    rng = np.random.default_rng(99)
    x = sample_uquadratic(a, b, rng.random(10**5))
    d = stats.kstest(x, cdf).statistic
    assert d <= 0.01


# -- empirical moments ---------------------------------------------------------

def test_empirical_single_sample():
    mean, cov = empirical_moments(np.array([[2.0, -1.0]]), jitter=1e-6)
    np.testing.assert_array_equal(mean, [2.0, -1.0])
    np.testing.assert_allclose(cov, 1e-6 * np.eye(2), atol=1e-18)


def test_empirical_two_points():
    mean, cov = empirical_moments(np.array([[-1.0], [1.0]]))
    assert mean[0] == 0.0
    assert cov[0, 0] == pytest.approx(1.0)  # 1/N normalization


def test_empirical_consistency():
    rng = np.random.default_rng(5)
    mu = np.array([1.0, -2.0])
    root = np.array([[1.0, 0.0], [0.4, 0.8]])
    X = mu + rng.standard_normal((10**5, 2)) @ root.T
    mean, cov = empirical_moments(X)
    Sigma = root @ root.T
    se_mean = np.sqrt(np.diag(Sigma) / 10**5)
    assert np.all(np.abs(mean - mu) <= 3 * se_mean)
    se_cov = np.sqrt(2.0 / 10**5) * np.abs(Sigma).max()
    assert np.abs(cov - Sigma).max() <= 3 * max(se_cov, 1e-3)


def test_empirical_empty_rejected():
    with pytest.raises(EmptySampleSet):
        empirical_moments(np.zeros((0, 3)))


def test_nominal_from_samples_jitters_noise():
    w = [np.array([[0.0], [1.0]])]
    v = [np.array([[0.5], [0.5]])]  # zero spread: cov is pure jitter
    x0 = np.array([[0.0], [2.0]])
    nom = sim.nominal_from_samples(w, v, x0)
    assert nom.v_cov[0, 0, 0] == pytest.approx(1e-6)
    assert nom.w_cov[0, 0, 0] == pytest.approx(0.25)


# -- closed loop ----------------------------------------------------------------

def degenerate_truth(n_x, n_y):
    z_x = DistributionSpec(kind="gaussian", mean=np.zeros(n_x), cov=np.zeros((n_x, n_x)))
    z_y = DistributionSpec(kind="gaussian", mean=np.zeros(n_y), cov=np.zeros((n_y, n_y)))
    return TrueDistributionSpec(w=z_x, v=z_y, x0=z_x)


def test_zero_noise_zero_cost(small_system):
    nom = NominalModel.stationary(small_system.T, np.zeros(2), 0.3 * np.eye(2),
                                  np.zeros(2), 0.5 * np.eye(2),
                                  np.zeros(2), 0.4 * np.eye(2))
    truth = degenerate_truth(2, 2)
    rc = backward_pass(small_system, nom, 50.0)
    cfg = RobustnessConfig(0.5, 0.3, 0.5, 50.0)
    sched = forward_pass(rc, nom, cfg, small_system, tol=1e-6)
    for method, s in (("wdrce", sched), ("lqg", nominal_schedule(small_system, nom))):
        res = run_closed_loop(small_system, s, truth, rng_seed=3, method=method)
        assert res.total_cost == pytest.approx(0.0, abs=1e-18)


def test_identical_seed_reduction_matches_lqg(small_system, small_nominal):
    truth = TrueDistributionSpec(
        w=DistributionSpec(kind="gaussian", mean=small_nominal.w_mean[0],
                           cov=small_nominal.w_cov[0]),
        v=DistributionSpec(kind="gaussian", mean=small_nominal.v_mean[0],
                           cov=small_nominal.v_cov[0]),
        x0=DistributionSpec(kind="gaussian", mean=small_nominal.x0_mean,
                            cov=small_nominal.x0_cov),
    )
    rc = backward_pass(small_system, small_nominal, 1e9)
    cfg = RobustnessConfig(0.0, 0.0, 0.0, 1e9)
    sched = forward_pass(rc, small_nominal, cfg, small_system, tol=1e-10)
    lqg = nominal_schedule(small_system, small_nominal)
    for seed in range(5):
        a = run_closed_loop(small_system, sched, truth, seed, method="wdrce")
        b = run_closed_loop(small_system, lqg, truth, seed, method="lqg")
        assert a.total_cost == pytest.approx(b.total_cost, rel=1e-4)


def test_scalar_hand_trace(scalar_system):
    """Fixed realization (w=0.3, v=-0.1, x0=1) against a four-line hand trace."""
    nom = NominalModel.stationary(1, [0.0], [[1.0]], [0.0], [[1.0]], [0.5], [[1.0]])
    truth = TrueDistributionSpec(
        w=DistributionSpec(kind="gaussian", mean=[0.3], cov=[[0.0]]),
        v=DistributionSpec(kind="gaussian", mean=[-0.1], cov=[[0.0]]),
        x0=DistributionSpec(kind="gaussian", mean=[1.0], cov=[[0.0]]),
    )
    rc = backward_pass(scalar_system, nom, 10.0)
    cfg = RobustnessConfig(0.2, 0.0, 0.0, 10.0)
    sched = forward_pass(rc, nom, cfg, scalar_system, tol=1e-8)
    res = run_closed_loop(scalar_system, sched, truth, rng_seed=0, method="wdrce")

    x0, w, v = 1.0, 0.3, -0.1
    y0 = x0 + v
    gain = sched.prior_cov(0)[0, 0] / (sched.prior_cov(0)[0, 0] + sched.v_cov_wc(0)[0, 0])
    xbar = 0.5 + gain * (y0 - 0.5)
    u = sched.riccati.K[0, 0, 0] * xbar + sched.riccati.L[0, 0]
    x1 = x0 + u + w
    hand = x0**2 + u**2 + x1**2
    assert res.total_cost == pytest.approx(hand, rel=1e-12)


def test_monte_carlo_single_run_mean(small_system, small_nominal):
    truth = degenerate_truth(2, 2)
    sched = nominal_schedule(small_system, small_nominal)
    summary = monte_carlo(small_system, sched, truth, "lqg", 1, base_seed=7)
    res = run_closed_loop(small_system, sched, truth, 7 ^ 0, method="lqg")
    assert summary.mean == res.total_cost


def test_monte_carlo_deterministic(small_system, small_nominal):
    truth = mean_shifted_truth(small_nominal, np.zeros(2))
    sched = nominal_schedule(small_system, small_nominal)
    s1 = monte_carlo(small_system, sched, truth, "lqg", 32, base_seed=42)
    s2 = monte_carlo(small_system, sched, truth, "lqg", 32, base_seed=42)
    np.testing.assert_array_equal(s1.costs, s2.costs)
    assert s1.to_dict() == s2.to_dict()


def test_monte_carlo_parallel_matches_sequential(small_system, small_nominal):
    truth = mean_shifted_truth(small_nominal, np.zeros(2))
    sched = nominal_schedule(small_system, small_nominal)
    s1 = monte_carlo(small_system, sched, truth, "lqg", 16, base_seed=1, workers=1)
    s2 = monte_carlo(small_system, sched, truth, "lqg", 16, base_seed=1, workers=4)
    np.testing.assert_array_equal(s1.costs, s2.costs)


def test_guaranteed_bound_theta_zero(small_system, small_nominal):
    rc = backward_pass(small_system, small_nominal, 50.0)
    cfg = RobustnessConfig(0.0, 0.3, 0.5, 50.0)
    sched = forward_pass(rc, small_nominal, cfg, small_system, tol=1e-6)
    assert guaranteed_bound(sched, 0.0) == sched.bound_value
    assert guaranteed_bound(sched, 0.5) == pytest.approx(
        sched.bound_value + 50.0 * 0.25 * small_system.T)


def test_mean_shifted_truth_certificate(small_nominal):
    from drce.matops import gelbrich
    delta = np.array([0.3, -0.4])
    truth = mean_shifted_truth(small_nominal, delta)
    d = gelbrich(truth.w.mean, truth.w.cov, small_nominal.w_mean[0], small_nominal.w_cov[0])
    assert d == pytest.approx(0.5, abs=1e-9)


# -- radius rule -----------------------------------------------------------------

def test_radius_rule_case_values():
    assert radius_from_concentration(4.0, 3, 4.0) == pytest.approx(2.0, abs=0.0)
    assert radius_from_concentration(0.25, 3, 4.0) == pytest.approx(0.5, abs=0.0)
    assert radius_from_concentration(0.01, 8, 4.0) == pytest.approx(0.01**0.25, abs=1e-15)


def test_radius_rule_n4_bisection_residual():
    a = 0.05  # below 1/(log 3)^2
    theta = radius_from_concentration(a, 4, 3.0)
    resid = theta / np.log(2.0 + 1.0 / theta) - np.sqrt(a)
    assert abs(resid) <= 1e-10


def test_radius_rule_case_gap():
    with pytest.raises(CaseGap):
        radius_from_concentration(0.9, 4, 3.0)


def test_select_radius_end_to_end():
    params = RadiusSelectionParams(
        beta=0.05, N=15, T=20,
        sources={"w": SourceTailParams(n=10), "v": SourceTailParams(n=10),
                 "x0": SourceTailParams(n=10)})
    radii = select_radius(params)
    tail = 1.0 - 0.95 ** (1.0 / 41.0)
    a = np.log(1.0 / tail) / 15.0
    expected = a ** 0.2 if a <= 1 else a ** (2.0 / 3.0)
    assert radii["w"] == pytest.approx(expected, rel=1e-12)
    assert set(radii) == {"w", "v", "x0"}


def test_radius_params_validation():
    with pytest.raises(ValueError):
        RadiusSelectionParams(beta=0.05, N=10, T=5,
                              sources={"w": SourceTailParams(n=3, c=2.0)})
    with pytest.raises(ValueError):
        RadiusSelectionParams(beta=1.5, N=10, T=5,
                              sources={"w": SourceTailParams(n=3)})


# -- emission ---------------------------------------------------------------------

def test_csv_and_summary_contract(tmp_path, small_system, small_nominal):
    truth = mean_shifted_truth(small_nominal, np.zeros(2))
    sched = nominal_schedule(small_system, small_nominal)
    summary = monte_carlo(small_system, sched, truth, "lqg", 3, base_seed=9)
    rows = sim.runs_rows(summary, sched.cfg)
    csv_path = tmp_path / "runs.csv"
    sim.write_runs_csv(csv_path, rows)
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "method,theta_w,theta_v,theta_x0,lambda,run_id,seed,total_cost,wall_time_ms"
    assert len(lines) == 4

    json_path = tmp_path / "summary.json"
    sim.write_summary_json(json_path, [summary.to_dict()])
    doc = json.loads(json_path.read_text())
    cell = doc["cells"][0]
    assert {"mean", "std", "stderr", "quantiles"} <= set(cell)
