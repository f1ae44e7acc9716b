import numpy as np
import pytest

from drce.model import LinearSystem, NominalModel


@pytest.fixture
def scalar_system():
    return LinearSystem(A=[[1.0]], B=[[1.0]], C=[[1.0]], Q=[[1.0]],
                        Qf=[[1.0]], R=[[1.0]], T=1)


@pytest.fixture
def scalar_nominal():
    return NominalModel.stationary(1, [0.0], [[1.0]], [0.0], [[1.0]], [0.0], [[1.0]])


@pytest.fixture
def small_system():
    """Stable 2-state plant with full-rank input coupling (keeps the
    error-weighting matrices PSD) for fast closed-loop tests."""
    A = [[0.8, 0.2], [0.0, 0.7]]
    B = [[1.0, 0.0], [0.5, 1.0]]
    C = [[1.0, 0.0], [0.0, 1.0]]
    Q = np.eye(2)
    R = np.eye(2)
    return LinearSystem(A=A, B=B, C=C, Q=Q, Qf=Q, R=R, T=4)


@pytest.fixture
def small_nominal(small_system):
    T = small_system.T
    return NominalModel.stationary(
        T,
        w_mean=[0.1, -0.05], w_cov=0.3 * np.eye(2),
        v_mean=[0.0, 0.02], v_cov=0.5 * np.eye(2),
        x0_mean=[1.0, -0.5], x0_cov=0.4 * np.eye(2),
    )


def rand_spd(rng, n, scale=1.0):
    M = rng.standard_normal((n, n))
    return scale * (M @ M.T + 0.5 * np.eye(n))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
