"""Symmetric-matrix primitives: PSD square roots, Bures and Gelbrich distances.

All inputs are treated as symmetric; matrices are symmetrized on entry via
(M + M^T)/2 so that small asymmetries from upstream arithmetic never leak
into eigendecompositions.
"""

from __future__ import annotations

import numpy as np

# PSD test passes iff lambda_min >= -PSD_RTOL * max(1, lambda_max);
# PD requires lambda_min >= PD_RTOL * max(1, lambda_max).
PSD_RTOL = 1e-9
PD_RTOL = 1e-12


class MatOpsError(ValueError):
    pass


class NotPSD(MatOpsError):
    """Matrix has an eigenvalue below the PSD tolerance."""


class DimensionMismatch(MatOpsError):
    """Operands have inconsistent shapes."""


def symmetrize(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected square matrix, got shape {M.shape}")
    return 0.5 * (M + M.T)


def eig_range(M: np.ndarray) -> tuple[float, float]:
    """(lambda_min, lambda_max) of the symmetrized matrix."""
    w = np.linalg.eigvalsh(symmetrize(M))
    return float(w[0]), float(w[-1])


def is_psd(M: np.ndarray, rtol: float = PSD_RTOL) -> bool:
    lo, hi = eig_range(M)
    return lo >= -rtol * max(1.0, hi)


def is_pd(M: np.ndarray, rtol: float = PD_RTOL) -> bool:
    lo, hi = eig_range(M)
    return lo >= rtol * max(1.0, hi) and lo > 0.0


def psd_sqrt(M: np.ndarray) -> np.ndarray:
    """Unique PSD square root via symmetric eigendecomposition.

    Eigenvalues in [-tol, 0] are clamped to zero; anything below raises
    NotPSD.
    """
    M = symmetrize(M)
    w, V = np.linalg.eigh(M)
    hi = max(1.0, float(w[-1]))
    if w[0] < -PSD_RTOL * hi:
        raise NotPSD(f"lambda_min={w[0]:.3e} below tolerance for psd_sqrt")
    w = np.clip(w, 0.0, None)
    return symmetrize((V * np.sqrt(w)) @ V.T)


def bures_sq(S1: np.ndarray, S2: np.ndarray) -> float:
    """Squared Bures-Wasserstein distance between PSD matrices.

    Tr[S1 + S2 - 2 (S2^{1/2} S1 S2^{1/2})^{1/2}], clamped at zero against
    roundoff for nearly identical inputs.
    """
    S1 = symmetrize(S1)
    S2 = symmetrize(S2)
    if S1.shape != S2.shape:
        raise DimensionMismatch(f"shapes {S1.shape} vs {S2.shape}")
    if not is_psd(S1) or not is_psd(S2):
        raise NotPSD("bures_sq requires PSD operands")
    root2 = psd_sqrt(S2)
    cross = psd_sqrt(symmetrize(root2 @ S1 @ root2))
    val = float(np.trace(S1) + np.trace(S2) - 2.0 * np.trace(cross))
    return max(val, 0.0)


def gelbrich(mu1: np.ndarray, S1: np.ndarray, mu2: np.ndarray, S2: np.ndarray) -> float:
    """Moment-based lower bound on the type-2 Wasserstein distance."""
    mu1 = np.asarray(mu1, dtype=float).ravel()
    mu2 = np.asarray(mu2, dtype=float).ravel()
    S1 = np.atleast_2d(np.asarray(S1, dtype=float))
    S2 = np.atleast_2d(np.asarray(S2, dtype=float))
    if mu1.shape != mu2.shape:
        raise DimensionMismatch(f"mean shapes {mu1.shape} vs {mu2.shape}")
    if S1.shape[0] != mu1.shape[0]:
        raise DimensionMismatch("mean/covariance dimensions inconsistent")
    d2 = float(np.dot(mu1 - mu2, mu1 - mu2)) + bures_sq(S1, S2)
    return float(np.sqrt(max(d2, 0.0)))


def solve_psym(M: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve M X = B for symmetric positive definite M via Cholesky."""
    from scipy.linalg import cho_factor, cho_solve

    c = cho_factor(symmetrize(M), lower=True)
    return cho_solve(c, B)
