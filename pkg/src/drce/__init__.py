"""Wasserstein distributionally robust control and state estimation for
partially observable linear stochastic systems.

Offline: a backward Riccati pass produces the affine control law and the
worst-case disturbance-mean coefficients; a chain of small SDPs produces the
worst-case covariances. Online: a distributionally robust Kalman filter and
the precomputed gains run in pure matrix-vector arithmetic.
"""

from .model import (DistributionSpec, LinearSystem, NominalModel,
                    RobustnessConfig, TrueDistributionSpec, validate)
from .riccati import (RiccatiSolution, backward_pass, lambda_hat,
                      lambda_select, lqg_backward_pass)
from .systems import builtin_system
from .worstcase import (OfflineSchedule, StageSdpSolution, forward_pass,
                        load_schedule, save_schedule, solve_init_sdp,
                        solve_stage_sdp, verify_schedule, verify_solution)

__version__ = "0.1.0"

__all__ = [
    "DistributionSpec", "LinearSystem", "NominalModel", "RobustnessConfig",
    "TrueDistributionSpec", "validate",
    "RiccatiSolution", "backward_pass", "lqg_backward_pass", "lambda_hat",
    "lambda_select",
    "OfflineSchedule", "StageSdpSolution", "forward_pass", "solve_init_sdp",
    "solve_stage_sdp", "verify_solution", "verify_schedule",
    "save_schedule", "load_schedule",
    "builtin_system",
    "__version__",
]
