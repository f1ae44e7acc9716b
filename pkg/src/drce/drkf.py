"""Online distributionally robust Kalman filter and controller.

All covariances and gains come from the offline schedule; the online loop is
pure matrix-vector arithmetic. A FilterGains cache holds the per-stage
innovation factorizations so repeated Monte Carlo runs share them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .matops import symmetrize
from .worstcase import OfflineSchedule


class SingularInnovation(RuntimeError):
    """C Sigma^- C^T + Sigma_v is not positive definite."""


@dataclass(frozen=True)
class FilterState:
    """Conditional means at stage t (covariances live in the schedule)."""

    t: int
    x_prior_mean: np.ndarray
    x_post_mean: np.ndarray | None = None


class FilterGains:
    """Per-stage Kalman gains precomputed from a schedule."""

    def __init__(self, schedule: OfflineSchedule):
        self.schedule = schedule
        C = schedule.system.C
        self.gain: list[np.ndarray] = []
        for t in range(schedule.T):
            prior = schedule.prior_cov(t)
            innov = symmetrize(C @ prior @ C.T + schedule.v_cov_wc(t))
            try:
                f = cho_factor(innov, lower=True)
            except np.linalg.LinAlgError as e:
                raise SingularInnovation(f"stage {t}: {e}") from e
            # gain = prior C^T innov^{-1}, one solve per column
            self.gain.append(cho_solve(f, C @ prior).T)


def initial_state(schedule: OfflineSchedule) -> FilterState:
    return FilterState(t=0, x_prior_mean=schedule.nominal.x0_mean.copy())


def measurement_update(state: FilterState, y: np.ndarray,
                       schedule: OfflineSchedule,
                       gains: FilterGains | None = None) -> FilterState:
    """Condition the prior mean on measurement y at the current stage."""
    t = state.t
    if not 0 <= t < schedule.T:
        raise ValueError(f"stage {t} outside horizon")
    C = schedule.system.C
    v_hat = schedule.nominal.v_mean[t]
    innovation = np.asarray(y, dtype=float).ravel() - C @ state.x_prior_mean - v_hat
    if gains is not None:
        gain = gains.gain[t]
    else:
        prior = schedule.prior_cov(t)
        innov_cov = symmetrize(C @ prior @ C.T + schedule.v_cov_wc(t))
        try:
            f = cho_factor(innov_cov, lower=True)
        except np.linalg.LinAlgError as e:
            raise SingularInnovation(f"stage {t}: {e}") from e
        gain = cho_solve(f, C @ prior).T
    post = state.x_prior_mean + gain @ innovation
    return FilterState(t=t, x_prior_mean=state.x_prior_mean, x_post_mean=post)


def control(state: FilterState, schedule: OfflineSchedule) -> np.ndarray:
    """u_t = K_t xbar_t + L_t."""
    rc = schedule.riccati
    return rc.K[state.t] @ state.x_post_mean + rc.L[state.t]


def worst_case_mean(state: FilterState, schedule: OfflineSchedule) -> np.ndarray:
    """Adversarial disturbance mean wbar*_t = H_t xbar_t + G_t."""
    rc = schedule.riccati
    return rc.H[state.t] @ state.x_post_mean + rc.G[state.t]


def predict(state: FilterState, u: np.ndarray, schedule: OfflineSchedule) -> FilterState:
    """Propagate the posterior mean one step under the worst-case disturbance mean."""
    sys_ = schedule.system
    w_bar = worst_case_mean(state, schedule)
    prior_next = sys_.A @ state.x_post_mean + sys_.B @ np.asarray(u, dtype=float).ravel() + w_bar
    return FilterState(t=state.t + 1, x_prior_mean=prior_next)
