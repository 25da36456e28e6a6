"""Galerkin state vectors and the weighted norms of the spectral scale."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def dirichlet_eigenvalues(J):
    """Eigenvalues j^2 of -d^2/dx^2 on (0, pi) with Dirichlet conditions."""
    return np.arange(1, J + 1, dtype=float) ** 2


def weighted_norm(coeffs, lam, s):
    """sqrt(sum lam^s c^2) along the last axis; works on batches."""
    c = np.asarray(coeffs, dtype=float)
    if s == 0:
        return np.sqrt(np.sum(c * c, axis=-1))
    w = np.asarray(lam, dtype=float) ** s
    return np.sqrt(np.sum(w * c * c, axis=-1))


@dataclass(frozen=True, eq=False)
class StateVector:
    coeffs: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float))
        object.__setattr__(self, "lam", np.asarray(self.lam, dtype=float))

    @classmethod
    def zeros(cls, lam):
        return cls(np.zeros(len(lam)), lam)

    @property
    def J(self):
        return len(self.coeffs)

    def h_norm(self):
        return float(weighted_norm(self.coeffs, self.lam, 0))

    def v_norm(self):
        return float(weighted_norm(self.coeffs, self.lam, 1))

    def hs_norm(self, s):
        return float(weighted_norm(self.coeffs, self.lam, s))

    def __add__(self, other):
        return StateVector(self.coeffs + _coeffs(other), self.lam)

    def __sub__(self, other):
        return StateVector(self.coeffs - _coeffs(other), self.lam)

    def __mul__(self, c):
        return StateVector(self.coeffs * c, self.lam)

    __rmul__ = __mul__

    def __neg__(self):
        return StateVector(-self.coeffs, self.lam)

    def __repr__(self):
        return f"StateVector({np.array2string(self.coeffs, precision=6)})"


def _coeffs(x):
    return x.coeffs if isinstance(x, StateVector) else np.asarray(x, dtype=float)


def as_batch(u):
    """Return (array of shape (N, J), was_single) for a StateVector or array input."""
    if isinstance(u, StateVector):
        return u.coeffs[None, :].copy(), True
    arr = np.asarray(u, dtype=float)
    if arr.ndim == 1:
        return arr[None, :].copy(), True
    return arr, False
