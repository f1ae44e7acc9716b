"""Core domain types shared by every other module, plus validation and config I/O.

All types are frozen after construction and safe to share read-only across
concurrent simulation workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import yaml

from . import matops


def _arr(x, shape=None) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if shape is not None and a.shape != tuple(shape):
        raise ValueError(f"expected shape {tuple(shape)}, got {a.shape}")
    return a


@dataclass(frozen=True)
class LinearSystem:
    """Plant x_{t+1} = A x_t + B u_t + w_t, y_t = C x_t + v_t with quadratic cost.

    Q and Qf weight the state (PSD), R the input (PD); T is the horizon.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    Q: np.ndarray
    Qf: np.ndarray
    R: np.ndarray
    T: int

    def __post_init__(self):
        for name in ("A", "B", "C", "Q", "Qf", "R"):
            object.__setattr__(self, name, np.atleast_2d(_arr(getattr(self, name))))
        object.__setattr__(self, "T", int(self.T))

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]

    def to_dict(self) -> dict:
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "Q": self.Q.tolist(),
            "Qf": self.Qf.tolist(),
            "R": self.R.tolist(),
            "T": self.T,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearSystem":
        return cls(A=d["A"], B=d["B"], C=d["C"], Q=d["Q"], Qf=d["Qf"], R=d["R"], T=d["T"])


@dataclass(frozen=True)
class NominalModel:
    """Per-stage nominal means/covariances for disturbance, noise, initial state.

    w arrays cover t = 0..T-1 (shape (T, n_x) / (T, n_x, n_x)), v arrays cover
    the T measurements used by the controller, and x0 describes the prior on
    the initial state.
    """

    w_mean: np.ndarray
    w_cov: np.ndarray
    v_mean: np.ndarray
    v_cov: np.ndarray
    x0_mean: np.ndarray
    x0_cov: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w_mean", np.atleast_2d(_arr(self.w_mean)))
        object.__setattr__(self, "w_cov", _arr(self.w_cov))
        object.__setattr__(self, "v_mean", np.atleast_2d(_arr(self.v_mean)))
        object.__setattr__(self, "v_cov", _arr(self.v_cov))
        object.__setattr__(self, "x0_mean", _arr(self.x0_mean).ravel())
        object.__setattr__(self, "x0_cov", np.atleast_2d(_arr(self.x0_cov)))

    @property
    def T(self) -> int:
        return self.w_mean.shape[0]

    def to_dict(self) -> dict:
        return {
            "w_mean": self.w_mean.tolist(),
            "w_cov": self.w_cov.tolist(),
            "v_mean": self.v_mean.tolist(),
            "v_cov": self.v_cov.tolist(),
            "x0_mean": self.x0_mean.tolist(),
            "x0_cov": self.x0_cov.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NominalModel":
        return cls(**{k: d[k] for k in ("w_mean", "w_cov", "v_mean", "v_cov", "x0_mean", "x0_cov")})

    @classmethod
    def stationary(cls, T, w_mean, w_cov, v_mean, v_cov, x0_mean, x0_cov) -> "NominalModel":
        """Tile one (mean, cov) pair per source across the whole horizon."""
        w_mean = _arr(w_mean).ravel()
        v_mean = _arr(v_mean).ravel()
        return cls(
            w_mean=np.tile(w_mean, (T, 1)),
            w_cov=np.tile(np.atleast_2d(_arr(w_cov)), (T, 1, 1)),
            v_mean=np.tile(v_mean, (T, 1)),
            v_cov=np.tile(np.atleast_2d(_arr(v_cov)), (T, 1, 1)),
            x0_mean=x0_mean,
            x0_cov=x0_cov,
        )


@dataclass(frozen=True)
class RobustnessConfig:
    """Ambiguity radii per uncertainty source and the disturbance penalty."""

    theta_w: float
    theta_v: float
    theta_x0: float
    lambda_: float

    def to_dict(self) -> dict:
        return {
            "theta_w": self.theta_w,
            "theta_v": self.theta_v,
            "theta_x0": self.theta_x0,
            "lambda": self.lambda_,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RobustnessConfig":
        return cls(
            theta_w=float(d["theta_w"]),
            theta_v=float(d["theta_v"]),
            theta_x0=float(d["theta_x0"]),
            lambda_=float(d.get("lambda", d.get("lambda_"))),
        )


@dataclass(frozen=True)
class DistributionSpec:
    """One uncertainty source: 'gaussian' with (mean, cov) or coordinatewise
    'uquadratic' on [a, b]."""

    kind: str
    mean: np.ndarray | None = None
    cov: np.ndarray | None = None
    a: np.ndarray | None = None
    b: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "gaussian":
            object.__setattr__(self, "mean", _arr(self.mean).ravel())
            object.__setattr__(self, "cov", np.atleast_2d(_arr(self.cov)))
        elif self.kind == "uquadratic":
            object.__setattr__(self, "a", _arr(self.a).ravel())
            object.__setattr__(self, "b", _arr(self.b).ravel())
        else:
            raise ValueError(f"unknown distribution kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return self.mean.shape[0] if self.kind == "gaussian" else self.a.shape[0]

    def moments(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact (mean, covariance) of the distribution."""
        if self.kind == "gaussian":
            return self.mean.copy(), self.cov.copy()
        mean = 0.5 * (self.a + self.b)
        var = 3.0 * (self.b - self.a) ** 2 / 20.0
        return mean, np.diag(var)

    def to_dict(self) -> dict:
        if self.kind == "gaussian":
            return {"kind": "gaussian", "mean": self.mean.tolist(), "cov": self.cov.tolist()}
        return {"kind": "uquadratic", "a": self.a.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "DistributionSpec":
        if d["kind"] == "gaussian":
            return cls(kind="gaussian", mean=d["mean"], cov=d["cov"])
        return cls(kind="uquadratic", a=d["a"], b=d["b"])


@dataclass(frozen=True)
class TrueDistributionSpec:
    """True (data-generating) distributions for disturbance, noise, initial state."""

    w: DistributionSpec
    v: DistributionSpec
    x0: DistributionSpec

    def to_dict(self) -> dict:
        return {"w": self.w.to_dict(), "v": self.v.to_dict(), "x0": self.x0.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "TrueDistributionSpec":
        return cls(
            w=DistributionSpec.from_dict(d["w"]),
            v=DistributionSpec.from_dict(d["v"]),
            x0=DistributionSpec.from_dict(d["x0"]),
        )


def _check_sym_psd(M: np.ndarray, name: str, out: list[str]):
    if M.shape[0] != M.shape[1]:
        out.append(f"{name} not square: {M.shape}")
        return
    if not np.allclose(M, M.T, atol=1e-9):
        out.append(f"{name} not symmetric")
    if not matops.is_psd(M):
        out.append(f"{name} not PSD")


def _check_sym_pd(M: np.ndarray, name: str, out: list[str]):
    if M.shape[0] != M.shape[1]:
        out.append(f"{name} not square: {M.shape}")
        return
    if not np.allclose(M, M.T, atol=1e-9):
        out.append(f"{name} not symmetric")
    if not matops.is_pd(M):
        out.append(f"{name} not PD")


def validate(system: LinearSystem, nominal: NominalModel, cfg: RobustnessConfig) -> list[str]:
    """Collect invariant violations; empty list iff everything checks out.

    Reports, never throws. The Assumption-3.1 lower bound on lambda is
    enforced separately by the Riccati recursion (see riccati.lambda_hat),
    since computing it requires the full backward pass.
    """
    v: list[str] = []
    n_x, n_u, n_y, T = system.n_x, system.n_u, system.n_y, system.T

    if T < 1:
        v.append("T must be >= 1")
    if system.A.shape != (n_x, n_x):
        v.append(f"A not square: {system.A.shape}")
    if system.B.shape != (n_x, n_u):
        v.append(f"B shape {system.B.shape} inconsistent with A")
    if system.C.shape != (n_y, n_x):
        v.append(f"C shape {system.C.shape} inconsistent with A")
    if system.Q.shape != (n_x, n_x):
        v.append(f"Q shape {system.Q.shape} inconsistent with A")
    if system.Qf.shape != (n_x, n_x):
        v.append(f"Qf shape {system.Qf.shape} inconsistent with A")
    if system.R.shape != (n_u, n_u):
        v.append(f"R shape {system.R.shape} inconsistent with B")
    else:
        _check_sym_pd(system.R, "R", v)
    if system.Q.shape == (n_x, n_x):
        _check_sym_psd(system.Q, "Q", v)
    if system.Qf.shape == (n_x, n_x):
        _check_sym_psd(system.Qf, "Qf", v)

    if nominal.w_mean.shape != (T, n_x):
        v.append(f"w_mean shape {nominal.w_mean.shape}, expected {(T, n_x)}")
    if nominal.w_cov.shape != (T, n_x, n_x):
        v.append(f"w_cov shape {nominal.w_cov.shape}, expected {(T, n_x, n_x)}")
    else:
        for t in range(T):
            _check_sym_psd(nominal.w_cov[t], f"w_cov[{t}]", v)
    if nominal.v_mean.shape != (T, n_y):
        v.append(f"v_mean shape {nominal.v_mean.shape}, expected {(T, n_y)}")
    if nominal.v_cov.shape != (T, n_y, n_y):
        v.append(f"v_cov shape {nominal.v_cov.shape}, expected {(T, n_y, n_y)}")
    else:
        for t in range(T):
            _check_sym_pd(nominal.v_cov[t], f"v_cov[{t}]", v)
    if nominal.x0_mean.shape != (n_x,):
        v.append(f"x0_mean shape {nominal.x0_mean.shape}, expected {(n_x,)}")
    if nominal.x0_cov.shape != (n_x, n_x):
        v.append(f"x0_cov shape {nominal.x0_cov.shape}, expected {(n_x, n_x)}")
    else:
        _check_sym_psd(nominal.x0_cov, "x0_cov", v)

    for name in ("theta_w", "theta_v", "theta_x0"):
        if getattr(cfg, name) < 0:
            v.append(f"{name} must be >= 0")
    if cfg.lambda_ <= 0:
        v.append("lambda must be > 0")

    return v


def validate_true_dists(dists: TrueDistributionSpec) -> list[str]:
    v: list[str] = []
    for name, spec in (("w", dists.w), ("v", dists.v), ("x0", dists.x0)):
        if spec.kind == "uquadratic":
            if np.any(spec.a >= spec.b):
                v.append(f"{name}: uquadratic requires a < b coordinatewise")
        else:
            _check_sym_psd(spec.cov, f"{name}.cov", v)
    return v


def save_config(path, system: LinearSystem, nominal: NominalModel | None,
                cfg: RobustnessConfig, true_dists: TrueDistributionSpec | None = None):
    """Write a structured config file (YAML, nested sections, row-major matrices)."""
    doc = {"version": 1, "system": system.to_dict(), "robustness": cfg.to_dict()}
    if nominal is not None:
        doc["nominal"] = nominal.to_dict()
    if true_dists is not None:
        doc["true_distributions"] = true_dists.to_dict()
    with open(path, "w") as f:
        yaml.safe_dump(doc, f, sort_keys=True)


def load_config(path) -> dict:
    """Read a config file back into typed objects (keys mirror save_config)."""
    with open(path) as f:
        doc = yaml.safe_load(f)
    out = {
        "system": LinearSystem.from_dict(doc["system"]),
        "robustness": RobustnessConfig.from_dict(doc["robustness"]),
    }
    if "nominal" in doc:
        out["nominal"] = NominalModel.from_dict(doc["nominal"])
    if "true_distributions" in doc:
        out["true_distributions"] = TrueDistributionSpec.from_dict(doc["true_distributions"])
    return out
