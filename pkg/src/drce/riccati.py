"""Backward Riccati recursion for the penalized minimax LQ problem.

Produces the value-function coefficients (P, S, r, q), the affine control
gains (K, L), and the worst-case disturbance-mean coefficients (H, G), all
stage-indexed. Also hosts the penalty feasibility boundary (lambda_hat) and
the penalty selection rule (lambda_select).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .matops import symmetrize
from .model import LinearSystem, NominalModel


class RiccatiError(RuntimeError):
    pass


class LambdaInfeasible(RiccatiError):
    """lambda I > P_t fails at some stage t in 1..T."""

    def __init__(self, t: int, lam: float, p_max: float):
        super().__init__(f"lambda={lam:.6g} <= lambda_max(P[{t}])={p_max:.6g}")
        self.t = t


class SingularSystem(RiccatiError):
    """(I + P_{t+1} Phi) is numerically singular."""


class NoFeasibleLambda(RiccatiError):
    """Doubling search exceeded 1e12 without satisfying the penalty bound."""


@dataclass(frozen=True)
class RiccatiSolution:
    """All stage-indexed coefficients of one backward pass.

    P, S are (T+1, n_x, n_x); r is (T+1, n_x); q is (T+1,).
    K is (T, n_u, n_x), L is (T, n_u); H is (T, n_x, n_x), G is (T, n_x).
    Terminal slots: P[T] = Qf, S[T] = 0, r[T] = 0, q[T] = 0.
    lambda_ is +inf for the classical (LQG) recursion.
    """

    P: np.ndarray
    S: np.ndarray
    r: np.ndarray
    q: np.ndarray
    K: np.ndarray
    L: np.ndarray
    H: np.ndarray
    G: np.ndarray
    Phi: np.ndarray
    lambda_: float

    @property
    def T(self) -> int:
        return self.K.shape[0]


def _solve_checked(M: np.ndarray, B: np.ndarray) -> np.ndarray:
    try:
        X = np.linalg.solve(M, B)
    except np.linalg.LinAlgError as e:
        raise SingularSystem(str(e)) from e
    resid = np.linalg.norm(M @ X - B)
    if not np.isfinite(resid) or resid > 1e-6 * max(1.0, np.linalg.norm(B)):
        raise SingularSystem(f"ill-conditioned solve, residual {resid:.3e}")
    return X


def _backward(system: LinearSystem, nominal: NominalModel, lambda_: float,
              check_lambda: bool) -> RiccatiSolution:
    A, B, C = system.A, system.B, system.C
    Q, Qf, R = system.Q, system.Qf, system.R
    n_x, n_u, T = system.n_x, system.n_u, system.T
    I = np.eye(n_x)

    RinvBT = _solve_checked(R, B.T)
    Phi = B @ RinvBT
    if check_lambda:
        Phi = Phi - I / lambda_

    P = np.zeros((T + 1, n_x, n_x))
    S = np.zeros((T + 1, n_x, n_x))
    r = np.zeros((T + 1, n_x))
    q = np.zeros(T + 1)
    K = np.zeros((T, n_u, n_x))
    L = np.zeros((T, n_u))
    H = np.zeros((T, n_x, n_x))
    G = np.zeros((T, n_x))

    P[T] = symmetrize(Qf)
    if check_lambda:
        p_max = float(np.linalg.eigvalsh(P[T])[-1])
        if lambda_ <= p_max:
            raise LambdaInfeasible(T, lambda_, p_max)

    for t in range(T - 1, -1, -1):
        Pn, rn, w_hat = P[t + 1], r[t + 1], nominal.w_mean[t]
        M = I + Pn @ Phi
        MinvP = _solve_checked(M, Pn)
        P[t] = symmetrize(Q + A.T @ MinvP @ A)
        S[t] = symmetrize(Q + A.T @ Pn @ A - P[t])
        Minv_rw = _solve_checked(M, rn + Pn @ w_hat)
        r[t] = A.T @ Minv_rw
        q[t] = (
            q[t + 1]
            + (2.0 * w_hat - Phi @ rn) @ _solve_checked(M, rn)
            + w_hat @ MinvP @ w_hat
        )
        if check_lambda:
            q[t] -= lambda_ * float(np.trace(nominal.w_cov[t]))

        K[t] = -np.linalg.solve(R, B.T @ MinvP @ A)
        L[t] = -np.linalg.solve(R, B.T @ Minv_rw)

        if check_lambda:
            lamI_P = lambda_ * I - Pn
            H[t] = _solve_checked(lamI_P, Pn @ (A + B @ K[t]))
            G[t] = _solve_checked(lamI_P, Pn @ (B @ L[t]) + rn + lambda_ * w_hat)
        else:
            H[t] = np.zeros((n_x, n_x))
            G[t] = w_hat.copy()

        if check_lambda and t >= 1:
            if not np.all(np.isfinite(P[t])):
                raise LambdaInfeasible(t, lambda_, float("inf"))
            p_max = float(np.linalg.eigvalsh(P[t])[-1])
            if lambda_ <= p_max:
                raise LambdaInfeasible(t, lambda_, p_max)

    return RiccatiSolution(P=P, S=S, r=r, q=q, K=K, L=L, H=H, G=G, Phi=Phi,
                           lambda_=lambda_ if check_lambda else float("inf"))


def backward_pass(system: LinearSystem, nominal: NominalModel, lambda_: float) -> RiccatiSolution:
    """Penalized recursion; raises LambdaInfeasible when lambda I > P_t fails."""
    if lambda_ <= 0:
        raise LambdaInfeasible(0, lambda_, 0.0)
    return _backward(system, nominal, lambda_, check_lambda=True)


def lqg_backward_pass(system: LinearSystem, nominal: NominalModel) -> RiccatiSolution:
    """Classical LQG recursion: the same equations with the penalty terms removed.

    H is zero and G carries the nominal disturbance mean, so the online
    prediction step reduces to the standard nominal-mean form.
    """
    return _backward(system, nominal, float("inf"), check_lambda=False)


def _feasible(system: LinearSystem, nominal: NominalModel, lam: float) -> bool:
    try:
        backward_pass(system, nominal, lam)
        return True
    except (LambdaInfeasible, SingularSystem):
        return False


def lambda_hat(system: LinearSystem, nominal: NominalModel) -> float:
    """Infimum penalty satisfying lambda I > P_t for t=1..T, by bisection.

    Brackets by doubling upward from lambda_max(Qf); resolves the boundary to
    1e-8 relative tolerance.
    """
    lo = max(float(np.linalg.eigvalsh(symmetrize(system.Qf))[-1]), 0.0)
    hi = max(2.0 * lo, 1e-6)
    while not _feasible(system, nominal, hi):
        hi *= 2.0
        if hi > 1e12:
            raise NoFeasibleLambda(f"no feasible lambda below 1e12 (reached {hi:.3e})")
    while hi - lo > 1e-8 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid <= 0.0:
            break
        if _feasible(system, nominal, mid):
            hi = mid
        else:
            lo = mid
    return hi


def lambda_select(system: LinearSystem, nominal: NominalModel, theta_w: float,
                  worst_case_value_fn: Callable[[float], float],
                  n_grid: int = 50) -> float:
    """Penalty minimizing worst_case_value_fn(lambda) + lambda * theta_w^2 * T.

    A coarse grid scan locates the basin (the objective is not provably
    unimodal), then golden-section search refines to 1e-4 relative tolerance.
    worst_case_value_fn evaluates the optimal worst-case value of the
    penalized problem at the given lambda.
    """
    T = system.T
    lam_hat = lambda_hat(system, nominal)
    lo = max(lam_hat * (1.0 + 1e-4), 1e-9)

    def objective(lam: float) -> float:
        return worst_case_value_fn(lam) + lam * theta_w**2 * T

    # Doubling until the objective starts increasing.
    hi = max(2.0 * lo, 1.0)
    f_prev = objective(hi)
    while True:
        nxt = 2.0 * hi
        f_next = objective(nxt)
        if f_next > f_prev or nxt > 1e12:
            hi = nxt
            break
        hi, f_prev = nxt, f_next

    grid = np.linspace(lo, hi, n_grid)
    vals = [objective(g) for g in grid]
    i = int(np.argmin(vals))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, n_grid - 1)]

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = objective(x1), objective(x2)
    while b - a > 1e-4 * max(1.0, abs(b)):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = objective(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = objective(x2)
    return 0.5 * (a + b)
