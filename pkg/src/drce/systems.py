"""Builtin benchmark systems so the desk-scale experiments need no external data."""

from __future__ import annotations

import numpy as np

from .model import LinearSystem


def _bidiagonal(n: int, value: float) -> np.ndarray:
    A = np.zeros((n, n))
    idx = np.arange(n)
    A[idx, idx] = value
    A[idx[:-1], idx[:-1] + 1] = value
    return A


def builtin_system(name: str, T: int = 20) -> LinearSystem:
    """10-state benchmarks: 'paper10' (A entries 0.2 on the main and first
    upper diagonal) and 'paper10-shift' (same pattern with entries 1.0)."""
    n = 10
    I = np.eye(n)
    if name == "paper10":
        A = _bidiagonal(n, 0.2)
    elif name == "paper10-shift":
        A = _bidiagonal(n, 1.0)
    else:
        raise KeyError(f"unknown builtin system {name!r}")
    return LinearSystem(A=A, B=I, C=I, Q=I, Qf=I, R=I, T=T)


BUILTIN_NAMES = ("paper10", "paper10-shift")
