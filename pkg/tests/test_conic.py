import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from drce.conic import SdpProblem, SolverFailure, smat, svec, svec_dim

from conftest import rand_spd


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=7), st.integers(min_value=0, max_value=2**31 - 1))
def test_svec_round_trip(n, seed):
    M = rand_spd(np.random.default_rng(seed), n)
    v = svec(M)
    assert v.shape == (svec_dim(n),)
    np.testing.assert_allclose(smat(v, n), M, atol=1e-14)


def test_svec_preserves_inner_product(rng):
    A = rand_spd(rng, 4)
    B = rand_spd(rng, 4)
    assert np.dot(svec(A), svec(B)) == pytest.approx(np.trace(A @ B), rel=1e-12)


def test_eigenvalue_sum_sdp(rng):
    """max <W, X> over 0 <= X <= I equals the sum of positive eigenvalues."""
    W = rand_spd(rng, 4) - 1.2 * np.eye(4)
    expected = np.linalg.eigvalsh(W)
    expected = expected[expected > 0].sum()

    prob = SdpProblem()
    prob.add_symmetric("X", 4)
    prob.maximize([(W, "X")])
    I = np.eye(4)
    prob.add_psd(4, np.zeros((4, 4)), [(0, 0, I, "X", I)])
    prob.add_psd(4, I, [(0, 0, -I, "X", I)])
    sol = prob.solve(tol=1e-6)
    assert sol.objective == pytest.approx(expected, abs=1e-6)
    assert sol.gap_rel <= 1e-6


def test_equality_pins_variable(rng):
    target = rand_spd(rng, 3)
    prob = SdpProblem()
    prob.add_symmetric("X", 3)
    prob.maximize([(np.eye(3), "X")])
    I = np.eye(3)
    prob.add_psd(3, np.zeros((3, 3)), [(0, 0, I, "X", I)])
    prob.add_eq(target, [(0, 0, I, "X", I)])
    sol = prob.solve(tol=1e-8)
    np.testing.assert_allclose(sol.values["X"], target, atol=1e-7)
    assert sol.objective == pytest.approx(np.trace(target), abs=1e-7)


def test_trace_inequality_binds():
    prob = SdpProblem()
    prob.add_symmetric("X", 2)
    prob.maximize([(np.eye(2), "X")])
    I = np.eye(2)
    prob.add_psd(2, np.zeros((2, 2)), [(0, 0, I, "X", I)])
    prob.add_scalar_ineq([(np.eye(2), "X")], 3.0)
    sol = prob.solve(tol=1e-8)
    assert sol.objective == pytest.approx(3.0, abs=1e-6)


def test_general_matrix_variable_bures_link(rng):
    """max Tr[Y] s.t. [[S1, Y], [Y^T, S2]] >= 0 equals Tr[(S1^1/2 S2 S1^1/2)^1/2]."""
    from drce.matops import psd_sqrt

    S1, S2 = rand_spd(rng, 3), rand_spd(rng, 3)
    root = psd_sqrt(S1)
    expected = float(np.trace(psd_sqrt(root @ S2 @ root)))

    prob = SdpProblem()
    prob.add_symmetric("S2v", 3)
    prob.add_matrix("Y", 3, 3)
    prob.maximize([(np.eye(3), "Y")])
    I = np.eye(3)
    const = np.zeros((6, 6))
    const[:3, :3] = S1
    prob.add_psd(6, const, [
        (0, 3, I, "Y", I),
        (3, 0, I, "Y", I, True),
        (3, 3, I, "S2v", I),
    ])
    prob.add_eq(S2, [(0, 0, I, "S2v", I)])
    sol = prob.solve(tol=1e-8)
    assert sol.objective == pytest.approx(expected, rel=1e-7)


def test_gap_contract_reported():
    prob = SdpProblem()
    prob.add_symmetric("X", 2)
    prob.maximize([(np.eye(2), "X")])
    prob.add_psd(2, np.zeros((2, 2)), [(0, 0, np.eye(2), "X", np.eye(2))])
    prob.add_scalar_ineq([(np.eye(2), "X")], 1.0)
    sol = prob.solve(tol=1e-3)
    assert sol.gap_rel <= 1e-3
    assert sol.gap_abs >= 0.0
    assert sol.iterations > 0


def test_infeasible_raises():
    prob = SdpProblem()
    prob.add_symmetric("X", 2)
    prob.maximize([(np.eye(2), "X")])
    I = np.eye(2)
    # X >= I but tr X <= 0 is infeasible
    prob.add_psd(2, -I, [(0, 0, I, "X", I)])
    prob.add_scalar_ineq([(np.eye(2), "X")], 0.0)
    with pytest.raises(SolverFailure):
        prob.solve(tol=1e-6)


def test_objective_scale_is_exact(rng):
    W = rand_spd(rng, 3)
    vals = []
    for scale in (1.0, 1e6):
        prob = SdpProblem()
        prob.add_symmetric("X", 3)
        prob.maximize([(W, "X")])
        I = np.eye(3)
        prob.add_psd(3, np.zeros((3, 3)), [(0, 0, I, "X", I)])
        prob.add_psd(3, I, [(0, 0, -I, "X", I)])
        vals.append(prob.solve(tol=1e-8, objective_scale=scale).objective)
    # accuracy in unscaled terms degrades by roughly the scale factor
    assert vals[0] == pytest.approx(vals[1], rel=1e-4)


def test_duplicate_variable_rejected():
    prob = SdpProblem()
    prob.add_symmetric("X", 2)
    with pytest.raises(ValueError):
        prob.add_symmetric("X", 3)
