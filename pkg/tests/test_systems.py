import numpy as np
import pytest

from drce.model import NominalModel
from drce.riccati import backward_pass, lambda_hat
from drce.systems import builtin_system


def test_paper10_structure():
    s = builtin_system("paper10", T=20)
    assert s.n_x == s.n_u == s.n_y == 10
    assert s.T == 20
    assert s.A[0, 0] == 0.2 and s.A[0, 1] == 0.2
    assert s.A[1, 0] == 0.0 and s.A[0, 2] == 0.0
    np.testing.assert_array_equal(s.B, np.eye(10))
    np.testing.assert_array_equal(s.Qf, np.eye(10))


def test_paper10_shift_structure():
    s = builtin_system("paper10-shift", T=5)
    assert s.A[3, 3] == 1.0 and s.A[3, 4] == 1.0 and s.A[4, 3] == 0.0


def test_paper10_shift_synthesizable():
    s = builtin_system("paper10-shift", T=5)
    nom = NominalModel.stationary(5, np.zeros(10), 0.1 * np.eye(10),
                                  np.zeros(10), np.eye(10),
                                  np.zeros(10), 0.1 * np.eye(10))
    lh = lambda_hat(s, nom)
    rc = backward_pass(s, nom, 2.0 * lh)
    assert np.all(np.isfinite(rc.K))


def test_unknown_builtin():
    with pytest.raises(KeyError):
        builtin_system("paper11")
