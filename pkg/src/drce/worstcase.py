"""Offline worst-case covariance synthesis.

Solves the initial-stage SDP and the per-stage SDPs that jointly determine
the worst-case disturbance, noise, and state covariances, chains them forward
in time into an OfflineSchedule, and audits the solutions independently of
the solver. A zero noise radius pins the noise covariance to its nominal
value analytically (the problem then has no strictly feasible point in the
eliminated block, and the pinned value is the unique feasible one).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import matops
from .conic import SdpProblem, SolverFailure
from .matops import psd_sqrt, symmetrize
from .model import LinearSystem, NominalModel, RobustnessConfig
from .riccati import RiccatiSolution

__all__ = [
    "StageSdpSolution", "InitSolution", "OfflineSchedule",
    "solve_init_sdp", "solve_stage_sdp", "forward_pass",
    "verify_solution", "verify_schedule", "save_schedule", "load_schedule",
    "AssumptionViolated", "SolverFailure", "VerificationReport",
]

SIGMA_V_FLOOR = 1e-8
FEAS_TOL = 1e-7


class AssumptionViolated(RuntimeError):
    """lambda I - P_{t+1} has a nonpositive eigenvalue."""


@dataclass(frozen=True)
class StageSdpSolution:
    """Optimizer of the stage-t problem (covariances indexed t+1 where noted)."""

    t: int
    sigma_x_prior: np.ndarray
    sigma_x_post: np.ndarray
    sigma_w: np.ndarray
    sigma_v: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    objective: float
    gap: float


@dataclass(frozen=True)
class InitSolution:
    """Optimizer of the initial-stage problem (time 0 covariances)."""

    sigma_x_prior: np.ndarray
    sigma_x_post: np.ndarray
    sigma_v: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    objective: float
    gap: float


@dataclass(frozen=True)
class OfflineSchedule:
    """Everything the online loop needs, precomputed."""

    system: LinearSystem
    nominal: NominalModel
    cfg: RobustnessConfig
    riccati: RiccatiSolution
    init: InitSolution
    stages: tuple[StageSdpSolution, ...]
    bound_value: float

    @property
    def T(self) -> int:
        return self.system.T

    def prior_cov(self, t: int) -> np.ndarray:
        return self.init.sigma_x_prior if t == 0 else self.stages[t - 1].sigma_x_prior

    def post_cov(self, t: int) -> np.ndarray:
        return self.init.sigma_x_post if t == 0 else self.stages[t - 1].sigma_x_post

    def v_cov_wc(self, t: int) -> np.ndarray:
        return self.init.sigma_v if t == 0 else self.stages[t - 1].sigma_v

    def w_cov_wc(self, t: int) -> np.ndarray:
        return self.stages[t].sigma_w


def _floor_pd(M: np.ndarray, floor: float = SIGMA_V_FLOOR) -> np.ndarray:
    M = symmetrize(M)
    lo = float(np.linalg.eigvalsh(M)[0])
    bump = max(0.0, floor - lo)
    if bump > 0.0:
        M = M + bump * np.eye(M.shape[0])
    return M


def _kf_posterior(prior: np.ndarray, C: np.ndarray, v_cov: np.ndarray) -> np.ndarray:
    innov = symmetrize(C @ prior @ C.T + v_cov)
    gain_t = matops.solve_psym(innov, C @ prior)
    return symmetrize(prior - prior @ C.T @ gain_t)


def _stage_objective(sigma_w, sigma_v, post_prev, S_next, P_next, lam, w_hat_cov, A, C):
    """Exact stage value at (sigma_w, sigma_v), Bures term evaluated by square root."""
    prior = symmetrize(A @ post_prev @ A.T + sigma_w)
    post = _kf_posterior(prior, C, sigma_v)
    root = psd_sqrt(w_hat_cov)
    bures = float(np.trace(psd_sqrt(symmetrize(root @ sigma_w @ root))))
    return (float(np.trace(S_next @ post))
            + float(np.trace((P_next - lam * np.eye(A.shape[0])) @ sigma_w))
            + 2.0 * lam * bures)


def _bures_optimal_y(hat: np.ndarray, sig: np.ndarray) -> np.ndarray:
    """The coupling block attaining Tr[Y] = Tr[(hat^1/2 sig hat^1/2)^1/2].

    Requires hat PD (callers guard); the block sits on the boundary of the
    coupling LMI by construction.
    """
    root = psd_sqrt(hat)
    cross = psd_sqrt(symmetrize(root @ symmetrize(sig) @ root))
    return root @ np.linalg.solve(root, cross.T).T


def _polish_sigma_w(sigma_w, sigma_v, post_prev, S_next, P_next, lam, w_hat_cov, A, C):
    """Fixed-point refinement of the disturbance covariance block.

    At an interior optimum the gradient condition rearranges to
    Sigma_w = lam^2 D^{-1} What_w D^{-1} with D = lam I - P - G' S G and
    G = I - prior C'(C prior C' + Sigma_v)^{-1} C evaluated at the prior the
    candidate induces. Iterating from the solver's point removes the
    curvature-limited identification noise; the result is kept only when the
    iteration stays well-posed and does not lower the exact objective.
    """
    n = A.shape[0]
    I = np.eye(n)
    if float(np.linalg.eigvalsh(symmetrize(w_hat_cov))[0]) <= 1e-12:
        return sigma_w, None
    best_val = _stage_objective(sigma_w, sigma_v, post_prev, S_next, P_next,
                                lam, w_hat_cov, A, C)
    cur = sigma_w
    for _ in range(60):
        prior = symmetrize(A @ post_prev @ A.T + cur)
        W = symmetrize(C @ prior @ C.T + sigma_v)
        G = I - prior @ C.T @ matops.solve_psym(W, C)
        D = symmetrize(lam * I - P_next - G.T @ S_next @ G)
        if float(np.linalg.eigvalsh(D)[0]) <= 0.0:
            return sigma_w, None
        Dinv_what = np.linalg.solve(D, w_hat_cov)
        nxt = symmetrize(lam**2 * np.linalg.solve(D, Dinv_what.T))
        if np.abs(nxt - cur).max() <= 1e-15 * max(1.0, np.abs(nxt).max()):
            cur = nxt
            break
        cur = nxt
    val = _stage_objective(cur, sigma_v, post_prev, S_next, P_next, lam, w_hat_cov, A, C)
    if not np.isfinite(val) or val < best_val - 1e-9 * max(1.0, abs(best_val)):
        return sigma_w, None
    return cur, val


def solve_stage_sdp(sigma_x_post_t: np.ndarray, S_next: np.ndarray, P_next: np.ndarray,
                    lambda_: float, nominal_w_cov: np.ndarray, nominal_v_cov_next: np.ndarray,
                    theta_v: float, system: LinearSystem, tol: float = 1e-3,
                    t: int = -1) -> StageSdpSolution:
    """Worst-case covariances for one stage.

    Maximizes Tr[S_{t+1} Sigma_{x,t+1} + (P_{t+1} - lambda I) Sigma_w + 2 lambda Y]
    over the coupled prior/posterior/disturbance/noise covariance blocks.
    """
    A, C = system.A, system.C
    n_x, n_y = system.n_x, system.n_y
    Ix, Iy = np.eye(n_x), np.eye(n_y)

    lam_gap = float(np.linalg.eigvalsh(lambda_ * Ix - symmetrize(P_next))[0])
    if lam_gap <= 0.0:
        raise AssumptionViolated(
            f"lambda I - P_next has eigenvalue {lam_gap:.3e} <= 0 at stage {t}")

    S_next = symmetrize(S_next)
    w_hat_cov = symmetrize(nominal_w_cov)
    v_hat_cov = symmetrize(nominal_v_cov_next)
    pinned_v = theta_v == 0.0

    prob = SdpProblem()
    prob.add_symmetric("sp", n_x)
    prob.add_symmetric("s", n_x)
    prob.add_symmetric("sw", n_x)
    if not pinned_v:
        prob.add_symmetric("sv", n_y)
        prob.add_matrix("Z", n_y, n_y)
    prob.add_matrix("Y", n_x, n_x)

    prob.maximize([
        (S_next, "s"),
        (P_next - lambda_ * Ix, "sw"),
        (2.0 * lambda_ * Ix, "Y"),
    ])

    # Measurement-update LMI (Schur complement of the posterior equality).
    lmi1_const = np.zeros((n_x + n_y, n_x + n_y))
    lmi1_terms = [
        (0, 0, Ix, "sp", Ix),
        (0, 0, -Ix, "s", Ix),
        (0, n_x, Ix, "sp", C.T),
        (n_x, 0, C, "sp", Ix),
        (n_x, n_x, C, "sp", C.T),
    ]
    if pinned_v:
        lmi1_const[n_x:, n_x:] = v_hat_cov
    else:
        lmi1_terms.append((n_x, n_x, Iy, "sv", Iy))
    prob.add_psd(n_x + n_y, lmi1_const, lmi1_terms)

    # Bures coupling blocks.
    lmi2_const = np.zeros((2 * n_x, 2 * n_x))
    lmi2_const[:n_x, :n_x] = w_hat_cov
    prob.add_psd(2 * n_x, lmi2_const, [
        (0, n_x, Ix, "Y", Ix),
        (n_x, 0, Ix, "Y", Ix, True),
        (n_x, n_x, Ix, "sw", Ix),
    ])
    if not pinned_v:
        lmi3_const = np.zeros((2 * n_y, 2 * n_y))
        lmi3_const[:n_y, :n_y] = v_hat_cov
        prob.add_psd(2 * n_y, lmi3_const, [
            (0, n_y, Iy, "Z", Iy),
            (n_y, 0, Iy, "Z", Iy, True),
            (n_y, n_y, Iy, "sv", Iy),
        ])
        prob.add_scalar_ineq([(Iy, "sv"), (-2.0 * Iy, "Z")],
                             theta_v**2 - float(np.trace(v_hat_cov)))

    for name in ("sp", "s", "sw") + (() if pinned_v else ("sv",)):
        n = n_y if name == "sv" else n_x
        prob.add_psd(n, np.zeros((n, n)), [(0, 0, np.eye(n), name, np.eye(n))])

    prob.add_eq(symmetrize(A @ symmetrize(sigma_x_post_t) @ A.T), [
        (0, 0, Ix, "sp", Ix),
        (0, 0, -Ix, "sw", Ix),
    ])

    sol = prob.solve(tol=tol, objective_scale=max(1.0, lambda_))
    sigma_v = v_hat_cov if pinned_v else _floor_pd(sol.values["sv"])
    Z = v_hat_cov.copy() if pinned_v else sol.values["Z"]
    sigma_w = symmetrize(sol.values["sw"])
    Y = sol.values["Y"]
    objective = sol.objective

    post_prev = symmetrize(sigma_x_post_t)
    polished, pol_val = _polish_sigma_w(sigma_w, sigma_v, post_prev, S_next,
                                        P_next, lambda_, w_hat_cov, A, C)
    if pol_val is not None:
        sigma_w = polished
        objective = pol_val
        Y = _bures_optimal_y(w_hat_cov, sigma_w)

    # The optimizer's posterior block equals the measurement-update covariance
    # of the solved prior; the closed form avoids solver slack in directions
    # S_{t+1} weights weakly.
    prior = symmetrize(A @ post_prev @ A.T + sigma_w)
    return StageSdpSolution(
        t=t,
        sigma_x_prior=prior,
        sigma_x_post=_kf_posterior(prior, C, sigma_v),
        sigma_w=sigma_w,
        sigma_v=sigma_v,
        Y=Y,
        Z=Z,
        objective=objective,
        gap=sol.gap_rel,
    )


def solve_init_sdp(S0: np.ndarray, nominal: NominalModel, theta_v: float,
                   theta_x0: float, tol: float = 1e-3,
                   C: np.ndarray | None = None,
                   system: LinearSystem | None = None) -> InitSolution:
    """Worst-case initial prior/noise covariances maximizing Tr[S0 Sigma_{x,0}]."""
    if system is not None:
        C = system.C
    if C is None:
        raise ValueError("solve_init_sdp needs C or system")
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n_y, n_x = C.shape
    Ix, Iy = np.eye(n_x), np.eye(n_y)

    S0 = symmetrize(S0)
    x0_hat_cov = symmetrize(nominal.x0_cov)
    v_hat_cov = symmetrize(nominal.v_cov[0])
    pinned_v = theta_v == 0.0
    pinned_x0 = theta_x0 == 0.0

    if pinned_v and pinned_x0:
        # Zero radii force the nominal moments; the unique solution is the
        # plain Kalman measurement update.
        post = _kf_posterior(x0_hat_cov, C, v_hat_cov)
        return InitSolution(
            sigma_x_prior=x0_hat_cov.copy(), sigma_x_post=post,
            sigma_v=v_hat_cov.copy(), Y=x0_hat_cov.copy(), Z=v_hat_cov.copy(),
            objective=float(np.trace(S0 @ post)), gap=0.0)

    prob = SdpProblem()
    if not pinned_x0:
        prob.add_symmetric("sp", n_x)
        prob.add_matrix("Y", n_x, n_x)
    prob.add_symmetric("s", n_x)
    if not pinned_v:
        prob.add_symmetric("sv", n_y)
        prob.add_matrix("Z", n_y, n_y)

    prob.maximize([(S0, "s")])

    lmi1_const = np.zeros((n_x + n_y, n_x + n_y))
    lmi1_terms = [(0, 0, -Ix, "s", Ix)]
    if pinned_x0:
        lmi1_const[:n_x, :n_x] += x0_hat_cov
        lmi1_const[:n_x, n_x:] = x0_hat_cov @ C.T
        lmi1_const[n_x:, :n_x] = C @ x0_hat_cov
        lmi1_const[n_x:, n_x:] += C @ x0_hat_cov @ C.T
    else:
        lmi1_terms += [
            (0, 0, Ix, "sp", Ix),
            (0, n_x, Ix, "sp", C.T),
            (n_x, 0, C, "sp", Ix),
            (n_x, n_x, C, "sp", C.T),
        ]
    if pinned_v:
        lmi1_const[n_x:, n_x:] += v_hat_cov
    else:
        lmi1_terms.append((n_x, n_x, Iy, "sv", Iy))
    prob.add_psd(n_x + n_y, lmi1_const, lmi1_terms)

    if not pinned_x0:
        lmiY_const = np.zeros((2 * n_x, 2 * n_x))
        lmiY_const[:n_x, :n_x] = x0_hat_cov
        prob.add_psd(2 * n_x, lmiY_const, [
            (0, n_x, Ix, "Y", Ix),
            (n_x, 0, Ix, "Y", Ix, True),
            (n_x, n_x, Ix, "sp", Ix),
        ])
        prob.add_scalar_ineq([(Ix, "sp"), (-2.0 * Ix, "Y")],
                             theta_x0**2 - float(np.trace(x0_hat_cov)))
        prob.add_psd(n_x, np.zeros((n_x, n_x)), [(0, 0, Ix, "sp", Ix)])

    if not pinned_v:
        lmiZ_const = np.zeros((2 * n_y, 2 * n_y))
        lmiZ_const[:n_y, :n_y] = v_hat_cov
        prob.add_psd(2 * n_y, lmiZ_const, [
            (0, n_y, Iy, "Z", Iy),
            (n_y, 0, Iy, "Z", Iy, True),
            (n_y, n_y, Iy, "sv", Iy),
        ])
        prob.add_scalar_ineq([(Iy, "sv"), (-2.0 * Iy, "Z")],
                             theta_v**2 - float(np.trace(v_hat_cov)))
        prob.add_psd(n_y, np.zeros((n_y, n_y)), [(0, 0, Iy, "sv", Iy)])

    prob.add_psd(n_x, np.zeros((n_x, n_x)), [(0, 0, Ix, "s", Ix)])

    sol = prob.solve(tol=tol)
    sigma_prior = x0_hat_cov if pinned_x0 else symmetrize(sol.values["sp"])
    sigma_v = v_hat_cov if pinned_v else _floor_pd(sol.values["sv"])
    return InitSolution(
        sigma_x_prior=sigma_prior,
        sigma_x_post=_kf_posterior(sigma_prior, C, sigma_v),
        sigma_v=sigma_v,
        Y=x0_hat_cov.copy() if pinned_x0 else sol.values["Y"],
        Z=v_hat_cov.copy() if pinned_v else sol.values["Z"],
        objective=sol.objective,
        gap=sol.gap_rel,
    )


def _v_cov_next(nominal: NominalModel, t: int) -> np.ndarray:
    # Stage t couples the measurement at t+1; the final stage has no later
    # measurement feeding the cost (S_T = 0 makes its noise block inert), so
    # the last nominal slot is reused there.
    return nominal.v_cov[min(t + 1, nominal.T - 1)]


def forward_pass(riccati: RiccatiSolution, nominal: NominalModel, cfg: RobustnessConfig,
                 system: LinearSystem, tol: float = 1e-3) -> OfflineSchedule:
    """Initial SDP, then the stage SDPs chained forward in time.

    bound_value is the optimal worst-case value of the penalized problem:
    the initial-state terms evaluated under the worst-case initial
    distribution, plus q_0 and the per-stage optimal values.
    """
    T = system.T
    init = solve_init_sdp(riccati.S[0], nominal, cfg.theta_v, cfg.theta_x0,
                          tol=tol, system=system)
    stages = []
    post = init.sigma_x_post
    for t in range(T):
        stage = solve_stage_sdp(
            post, riccati.S[t + 1], riccati.P[t + 1], cfg.lambda_,
            nominal.w_cov[t], _v_cov_next(nominal, t), cfg.theta_v,
            system, tol=tol, t=t)
        stages.append(stage)
        post = stage.sigma_x_post

    x0 = nominal.x0_mean
    bound = (
        float(x0 @ riccati.P[0] @ x0)
        + float(np.trace(riccati.P[0] @ init.sigma_x_prior))
        + init.objective
        + 2.0 * float(riccati.r[0] @ x0)
        + float(riccati.q[0])
        + sum(s.objective for s in stages)
    )
    return OfflineSchedule(system=system, nominal=nominal, cfg=cfg, riccati=riccati,
                           init=init, stages=tuple(stages), bound_value=bound)


# -- independent audit ------------------------------------------------------

@dataclass
class VerificationReport:
    checks: list[tuple[str, bool, float]]

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def failures(self) -> list[str]:
        return [name for name, ok, _ in self.checks if not ok]


def _lmi_min_eig(M: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(symmetrize(M))[0])


def _bures_trace(hat: np.ndarray, sig: np.ndarray) -> float:
    root = psd_sqrt(hat)
    return float(np.trace(psd_sqrt(symmetrize(root @ symmetrize(sig) @ root))))


def verify_solution(sol, *, system: LinearSystem, nominal_v_cov: np.ndarray,
                    theta_v: float, tol: float = 1e-3,
                    S_next: np.ndarray | None = None, P_next: np.ndarray | None = None,
                    lambda_: float | None = None, nominal_w_cov: np.ndarray | None = None,
                    sigma_x_post_prev: np.ndarray | None = None,
                    S0: np.ndarray | None = None, nominal_x0_cov: np.ndarray | None = None,
                    theta_x0: float | None = None) -> VerificationReport:
    """Feasibility/optimality audit independent of the solver.

    Checks every LMI eigenvalue against -1e-7, the trace constraints against
    a 1e-7 slack, the prior-covariance equality, and the tightness of the
    Bures linearization (replacing Tr[Y] with the exact square-root trace
    must not raise the objective by more than tol).
    """
    C = system.C
    n_x, n_y = system.n_x, system.n_y
    checks: list[tuple[str, bool, float]] = []

    def add(name, value, ok):
        checks.append((name, bool(ok), float(value)))

    sp, s, sv = sol.sigma_x_prior, sol.sigma_x_post, sol.sigma_v

    lmi1 = np.block([[sp - s, sp @ C.T], [C @ sp, C @ sp @ C.T + sv]])
    add("lmi_measurement", _lmi_min_eig(lmi1), _lmi_min_eig(lmi1) >= -FEAS_TOL)

    lmiZ = np.block([[nominal_v_cov, sol.Z], [sol.Z.T, sv]])
    add("lmi_noise_coupling", _lmi_min_eig(lmiZ), _lmi_min_eig(lmiZ) >= -FEAS_TOL)

    tr_v = float(np.trace(sv) + np.trace(nominal_v_cov) - 2.0 * np.trace(sol.Z))
    add("trace_noise", tr_v, tr_v <= theta_v**2 + FEAS_TOL)
    bures_v = matops.bures_sq(_psd_clip(sv), _psd_clip(nominal_v_cov))
    add("gelbrich_noise", bures_v, bures_v <= theta_v**2 + 10.0 * FEAS_TOL)

    for name, M in (("sigma_x_prior", sp), ("sigma_x_post", s), ("sigma_v", sv)):
        add(f"psd_{name}", _lmi_min_eig(M), _lmi_min_eig(M) >= -FEAS_TOL)

    if isinstance(sol, StageSdpSolution):
        lmiY = np.block([[nominal_w_cov, sol.Y], [sol.Y.T, sol.sigma_w]])
        add("lmi_disturbance_coupling", _lmi_min_eig(lmiY), _lmi_min_eig(lmiY) >= -FEAS_TOL)
        add("psd_sigma_w", _lmi_min_eig(sol.sigma_w), _lmi_min_eig(sol.sigma_w) >= -FEAS_TOL)

        resid = np.abs(sp - system.A @ sigma_x_post_prev @ system.A.T - sol.sigma_w).max()
        add("prior_equality", resid, resid <= FEAS_TOL)

        lam = float(lambda_)
        obj_vars = (
            float(np.trace(S_next @ s))
            + float(np.trace((P_next - lam * np.eye(n_x)) @ sol.sigma_w))
            + 2.0 * lam * float(np.trace(sol.Y))
        )
        obj_bures = (
            float(np.trace(S_next @ s))
            + float(np.trace((P_next - lam * np.eye(n_x)) @ sol.sigma_w))
            + 2.0 * lam * _bures_trace(_psd_clip(nominal_w_cov), _psd_clip(sol.sigma_w))
        )
        scale = max(1.0, abs(sol.objective))
        add("objective_consistency", abs(obj_vars - sol.objective),
            abs(obj_vars - sol.objective) <= tol * scale)
        add("bures_tightness", obj_bures - obj_vars, obj_bures - obj_vars <= tol * scale)
    else:
        lmiY = np.block([[nominal_x0_cov, sol.Y], [sol.Y.T, sp]])
        add("lmi_init_coupling", _lmi_min_eig(lmiY), _lmi_min_eig(lmiY) >= -FEAS_TOL)
        tr_x0 = float(np.trace(sp) + np.trace(nominal_x0_cov) - 2.0 * np.trace(sol.Y))
        add("trace_init", tr_x0, tr_x0 <= theta_x0**2 + FEAS_TOL)
        bures_x0 = matops.bures_sq(_psd_clip(sp), _psd_clip(nominal_x0_cov))
        add("gelbrich_init", bures_x0, bures_x0 <= theta_x0**2 + 10.0 * FEAS_TOL)

        obj_vars = float(np.trace(S0 @ s))
        scale = max(1.0, abs(sol.objective))
        add("objective_consistency", abs(obj_vars - sol.objective),
            abs(obj_vars - sol.objective) <= tol * scale)

    return VerificationReport(checks=checks)


def _psd_clip(M: np.ndarray) -> np.ndarray:
    """Project tiny negative eigenvalues away before Bures evaluation."""
    M = symmetrize(M)
    w, V = np.linalg.eigh(M)
    return symmetrize((V * np.clip(w, 0.0, None)) @ V.T)


def verify_schedule(schedule: OfflineSchedule, tol: float = 1e-3) -> list[VerificationReport]:
    """Audit the initial solution and every stage of a schedule."""
    rc, nom, cfg, system = schedule.riccati, schedule.nominal, schedule.cfg, schedule.system
    reports = [verify_solution(
        schedule.init, system=system, nominal_v_cov=nom.v_cov[0], theta_v=cfg.theta_v,
        tol=tol, S0=rc.S[0], nominal_x0_cov=nom.x0_cov, theta_x0=cfg.theta_x0)]
    post = schedule.init.sigma_x_post
    for t, stage in enumerate(schedule.stages):
        reports.append(verify_solution(
            stage, system=system, nominal_v_cov=_v_cov_next(nom, t), theta_v=cfg.theta_v,
            tol=tol, S_next=rc.S[t + 1], P_next=rc.P[t + 1], lambda_=cfg.lambda_,
            nominal_w_cov=nom.w_cov[t], sigma_x_post_prev=post))
        post = stage.sigma_x_post
    return reports


# -- schedule persistence ---------------------------------------------------

SCHEDULE_FORMAT = "drce-schedule"
SCHEDULE_VERSION = 1


def _stage_dict(s: StageSdpSolution) -> dict:
    return {
        "t": s.t,
        "sigma_x_prior": s.sigma_x_prior.tolist(),
        "sigma_x_post": s.sigma_x_post.tolist(),
        "sigma_w": s.sigma_w.tolist(),
        "sigma_v": s.sigma_v.tolist(),
        "Y": s.Y.tolist(),
        "Z": s.Z.tolist(),
        "objective": s.objective,
        "gap": s.gap,
    }


def save_schedule(schedule: OfflineSchedule, path):
    rc = schedule.riccati
    doc = {
        "format": SCHEDULE_FORMAT,
        "version": SCHEDULE_VERSION,
        "dims": {"n_x": schedule.system.n_x, "n_u": schedule.system.n_u,
                 "n_y": schedule.system.n_y, "T": schedule.system.T},
        "system": schedule.system.to_dict(),
        "nominal": schedule.nominal.to_dict(),
        "robustness": schedule.cfg.to_dict(),
        "riccati": {
            "P": rc.P.tolist(), "S": rc.S.tolist(), "r": rc.r.tolist(),
            "q": rc.q.tolist(), "K": rc.K.tolist(), "L": rc.L.tolist(),
            "H": rc.H.tolist(), "G": rc.G.tolist(), "Phi": rc.Phi.tolist(),
            "lambda": rc.lambda_,
        },
        "init": {
            "sigma_x_prior": schedule.init.sigma_x_prior.tolist(),
            "sigma_x_post": schedule.init.sigma_x_post.tolist(),
            "sigma_v": schedule.init.sigma_v.tolist(),
            "Y": schedule.init.Y.tolist(),
            "Z": schedule.init.Z.tolist(),
            "objective": schedule.init.objective,
            "gap": schedule.init.gap,
        },
        "stages": [_stage_dict(s) for s in schedule.stages],
        "bound_value": schedule.bound_value,
    }
    with open(path, "w") as f:
        json.dump(doc, f, sort_keys=True, separators=(",", ":"))


class ScheduleFormatError(ValueError):
    pass


def load_schedule(path) -> OfflineSchedule:
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ScheduleFormatError(f"not a schedule file: {e}") from e
    if doc.get("format") != SCHEDULE_FORMAT:
        raise ScheduleFormatError(f"unrecognized format {doc.get('format')!r}")
    if doc.get("version") != SCHEDULE_VERSION:
        raise ScheduleFormatError(f"unsupported schedule version {doc.get('version')!r}")

    system = LinearSystem.from_dict(doc["system"])
    nominal = NominalModel.from_dict(doc["nominal"])
    cfg = RobustnessConfig.from_dict(doc["robustness"])
    rd = doc["riccati"]
    arr = lambda k: np.asarray(rd[k], dtype=float)
    rc = RiccatiSolution(P=arr("P"), S=arr("S"), r=arr("r"), q=arr("q"),
                         K=arr("K"), L=arr("L"), H=arr("H"), G=arr("G"),
                         Phi=arr("Phi"), lambda_=float(rd["lambda"]))
    idoc = doc["init"]
    init = InitSolution(
        sigma_x_prior=np.asarray(idoc["sigma_x_prior"], dtype=float),
        sigma_x_post=np.asarray(idoc["sigma_x_post"], dtype=float),
        sigma_v=np.asarray(idoc["sigma_v"], dtype=float),
        Y=np.asarray(idoc["Y"], dtype=float),
        Z=np.asarray(idoc["Z"], dtype=float),
        objective=float(idoc["objective"]),
        gap=float(idoc["gap"]),
    )
    stages = tuple(
        StageSdpSolution(
            t=int(sd["t"]),
            sigma_x_prior=np.asarray(sd["sigma_x_prior"], dtype=float),
            sigma_x_post=np.asarray(sd["sigma_x_post"], dtype=float),
            sigma_w=np.asarray(sd["sigma_w"], dtype=float),
            sigma_v=np.asarray(sd["sigma_v"], dtype=float),
            Y=np.asarray(sd["Y"], dtype=float),
            Z=np.asarray(sd["Z"], dtype=float),
            objective=float(sd["objective"]),
            gap=float(sd["gap"]),
        )
        for sd in doc["stages"]
    )
    return OfflineSchedule(system=system, nominal=nominal, cfg=cfg, riccati=rc,
                           init=init, stages=stages, bound_value=float(doc["bound_value"]))
