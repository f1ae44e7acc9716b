"""Minimal linear-SDP builder over a conic backend.

Problems are expressed as: maximize a sum of Frobenius inner products over
named matrix variables, subject to affine PSD constraints (LMIs), affine
symmetric-matrix equalities, and scalar linear inequalities. The lowered
standard form (zero cone, nonnegative cone, PSD triangle cones) is handed to
Clarabel, an interior-point conic solver, and the primal/dual objective pair
is reported back so callers can audit the duality gap.

Symmetric matrix variables and PSD slacks use the scaled upper-triangular
vectorization (column-major, off-diagonals times sqrt(2)), which makes the
Frobenius product of symmetric matrices the plain dot product of their
vectorizations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

import clarabel

from .matops import symmetrize

_SQRT2 = np.sqrt(2.0)


class SolverFailure(RuntimeError):
    """Backend did not return a solution meeting the gap/feasibility contract."""


def svec_dim(n: int) -> int:
    return n * (n + 1) // 2


_SVEC_CACHE: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _svec_index(n: int):
    """(rows, cols, scale) of the upper triangle in column-major order."""
    if n not in _SVEC_CACHE:
        i, j = np.triu_indices(n)
        order = np.lexsort((i, j))
        i, j = i[order], j[order]
        scale = np.where(i == j, 1.0, _SQRT2)
        _SVEC_CACHE[n] = (i, j, scale)
    return _SVEC_CACHE[n]


def svec(M: np.ndarray) -> np.ndarray:
    """Scaled upper-triangular vectorization (column-major)."""
    i, j, scale = _svec_index(M.shape[0])
    return M[i, j] * scale


def smat(v: np.ndarray, n: int) -> np.ndarray:
    """Inverse of svec."""
    i, j, scale = _svec_index(n)
    M = np.zeros((n, n))
    M[i, j] = v / scale
    M[j, i] = v / scale
    return M


@dataclass
class _Var:
    name: str
    offset: int
    shape: tuple[int, int]
    symmetric: bool

    @property
    def dim(self) -> int:
        m, n = self.shape
        return svec_dim(n) if self.symmetric else m * n

    def unpack(self, x: np.ndarray) -> np.ndarray:
        chunk = x[self.offset:self.offset + self.dim]
        if self.symmetric:
            return smat(chunk, self.shape[0])
        return chunk.reshape(self.shape)

    def pack_objective(self, W: np.ndarray) -> np.ndarray:
        """Coefficients c with c . x == <W, X> (Frobenius)."""
        if self.symmetric:
            return svec(symmetrize(W))
        return np.asarray(W, dtype=float).ravel()


@dataclass
class _Term:
    """One affine contribution L @ X @ R (or L @ X.T @ R) placed at block (row, col)."""

    row: int
    col: int
    L: np.ndarray
    var: str
    R: np.ndarray
    transpose: bool = False


@dataclass
class ConicSolution:
    values: dict[str, np.ndarray]
    objective: float
    objective_dual: float
    gap_abs: float
    gap_rel: float
    status: str
    iterations: int
    solve_time: float


class SdpProblem:
    """Linear SDP in named matrix variables; maximization form."""

    def __init__(self):
        self._vars: dict[str, _Var] = {}
        self._size = 0
        self._objective: list[tuple[np.ndarray, str]] = []
        self._psd: list[tuple[int, np.ndarray, list[_Term]]] = []
        self._eq: list[tuple[np.ndarray, list[_Term]]] = []
        self._ineq: list[tuple[list[tuple[np.ndarray, str]], float]] = []

    def add_symmetric(self, name: str, n: int) -> str:
        self._register(_Var(name, self._size, (n, n), symmetric=True))
        return name

    def add_matrix(self, name: str, m: int, n: int) -> str:
        self._register(_Var(name, self._size, (m, n), symmetric=False))
        return name

    def _register(self, v: _Var):
        if v.name in self._vars:
            raise ValueError(f"duplicate variable {v.name!r}")
        self._vars[v.name] = v
        self._size += v.dim

    def maximize(self, terms: list[tuple[np.ndarray, str]]):
        """Objective: sum of <W, X> Frobenius inner products."""
        self._objective = [(np.asarray(W, dtype=float), name) for W, name in terms]

    def add_psd(self, size: int, const: np.ndarray, terms: list[tuple]):
        """Affine LMI: const + sum of placed terms must be PSD.

        Each term is (row, col, L, var_name, R) with optional sixth element
        transpose=True to place L @ X.T @ R. The assembled matrix must be
        symmetric, so off-diagonal placements need their mirror images.
        """
        self._psd.append((size, np.asarray(const, dtype=float), [_Term(*t) for t in terms]))

    def add_eq(self, const: np.ndarray, terms: list[tuple]):
        """Symmetric-matrix equality: sum of placed terms == const."""
        const = np.asarray(const, dtype=float)
        self._eq.append((const, [_Term(*t) for t in terms]))

    def add_scalar_ineq(self, coeffs: list[tuple[np.ndarray, str]], rhs: float):
        """sum_i <W_i, X_i> <= rhs."""
        self._ineq.append(([(np.asarray(W, dtype=float), n) for W, n in coeffs], float(rhs)))

    # -- lowering ---------------------------------------------------------

    def _accumulate(self, size: int, terms: list[_Term]):
        """Per-variable coefficient matrices of one LMI.

        For basis element E_ij of the variable, L @ E_ij @ R is the outer
        product of L's i-th column with R's j-th row, which avoids forming
        the basis matrices.
        """
        coeff_cols: dict[int, np.ndarray] = {}

        def bump(col, r0, c0, block):
            M = coeff_cols.setdefault(col, np.zeros((size, size)))
            M[r0:r0 + block.shape[0], c0:c0 + block.shape[1]] += block

        for term in terms:
            var = self._vars[term.var]
            L, R = term.L, term.R
            m, n = var.shape
            if var.symmetric:
                k = 0
                for j in range(n):
                    for i in range(j + 1):
                        if i == j:
                            block = np.outer(L[:, i], R[i, :])
                        else:
                            block = (np.outer(L[:, i], R[j, :])
                                     + np.outer(L[:, j], R[i, :])) / _SQRT2
                        bump(var.offset + k, term.row, term.col, block)
                        k += 1
            else:
                for k in range(m * n):
                    i, j = divmod(k, n)
                    if term.transpose:
                        i, j = j, i
                    bump(var.offset + k, term.row, term.col, np.outer(L[:, i], R[j, :]))
        return coeff_cols

    def _lower(self):
        nvar = self._size
        q = np.zeros(nvar)
        for W, name in self._objective:
            var = self._vars[name]
            q[var.offset:var.offset + var.dim] -= var.pack_objective(W)

        rows_A: list[np.ndarray] = []
        rows_b: list[np.ndarray] = []
        cones: list = []

        # Zero cone: matrix equalities, svec'd.
        n_eq_rows = 0
        for const, terms in self._eq:
            n = const.shape[0]
            d = svec_dim(n)
            A_blk = np.zeros((d, nvar))
            for col, M in self._accumulate(n, terms).items():
                A_blk[:, col] = svec(symmetrize(M))
            rows_A.append(A_blk)
            rows_b.append(svec(symmetrize(const)))
            n_eq_rows += d
        if n_eq_rows:
            cones.append(clarabel.ZeroConeT(n_eq_rows))

        # Nonnegative cone: scalar inequalities a.x <= rhs -> rhs - a.x >= 0.
        if self._ineq:
            A_blk = np.zeros((len(self._ineq), nvar))
            b_blk = np.zeros(len(self._ineq))
            for i, (coeffs, rhs) in enumerate(self._ineq):
                for W, name in coeffs:
                    var = self._vars[name]
                    A_blk[i, var.offset:var.offset + var.dim] += var.pack_objective(W)
                b_blk[i] = rhs
            rows_A.append(A_blk)
            rows_b.append(b_blk)
            cones.append(clarabel.NonnegativeConeT(len(self._ineq)))

        # PSD cones: M(x) >= 0 -> s = svec(M0) + sum x_k svec(Mk) in PSD.
        for size, const, terms in self._psd:
            d = svec_dim(size)
            A_blk = np.zeros((d, nvar))
            for col, M in self._accumulate(size, terms).items():
                A_blk[:, col] = -svec(symmetrize(M))
            rows_A.append(A_blk)
            rows_b.append(svec(symmetrize(const)))
            cones.append(clarabel.PSDTriangleConeT(size))

        A = sparse.csc_matrix(np.vstack(rows_A))
        b = np.concatenate(rows_b)
        return q, A, b, cones

    def solve(self, tol: float = 1e-3, verbose: bool = False,
              max_iter: int = 200, objective_scale: float = 1.0) -> ConicSolution:
        """Solve and enforce the duality-gap contract.

        The backend is driven well below the requested tolerance; the
        achieved |primal - dual| gap (absolute and value-normalized) must come
        in under tol or SolverFailure is raised. objective_scale divides the
        (linear) objective before the solve and multiplies the reported values
        back, which keeps huge penalty coefficients out of the backend's
        equilibration; the relative gap is reported for the scaled problem.
        """
        q, A, b, cones = self._lower()
        q = q / objective_scale
        settings = clarabel.DefaultSettings()
        settings.verbose = verbose
        settings.max_iter = max_iter
        target = max(min(tol * 1e-2, 1e-9), 1e-13)
        settings.tol_gap_abs = target
        settings.tol_gap_rel = target
        settings.tol_feas = target
        P = sparse.csc_matrix((self._size, self._size))
        solver = clarabel.DefaultSolver(P, q, A, b, cones, settings)
        sol = solver.solve()

        status = str(sol.status)
        if status not in ("SolverStatus.Solved", "SolverStatus.AlmostSolved", "Solved", "AlmostSolved"):
            raise SolverFailure(f"backend status {status}")

        primal = -float(sol.obj_val)
        dual = -float(sol.obj_val_dual)
        gap_abs = abs(primal - dual)
        gap_rel = gap_abs / max(1.0, abs(primal), abs(dual))
        if gap_rel > tol:
            raise SolverFailure(
                f"duality gap {gap_rel:.3e} exceeds tolerance {tol:.1e} (status {status})")

        x = np.asarray(sol.x)
        values = {name: var.unpack(x) for name, var in self._vars.items()}
        return ConicSolution(
            values=values,
            objective=primal * objective_scale,
            objective_dual=dual * objective_scale,
            gap_abs=gap_abs * objective_scale,
            gap_rel=gap_rel,
            status=status,
            iterations=int(sol.iterations),
            solve_time=float(sol.solve_time),
        )
