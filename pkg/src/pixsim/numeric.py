"""Dense LU factorization with partial pivoting for small MNA systems."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-13


class SingularMatrixError(ArithmeticError):
    """Raised when a pivot falls below the singularity threshold."""

    def __init__(self, column: int, pivot: float):
        super().__init__(f"singular matrix: pivot {pivot:.3e} in column {column}")
        self.column = column
        self.pivot = pivot


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class LuFactors:
    """Packed factors: strict lower part holds L (unit diagonal), upper holds U."""

    lu: np.ndarray
    perm: np.ndarray

    @property
    def n(self) -> int:
        return self.lu.shape[0]

    def lower(self) -> np.ndarray:
        return np.tril(self.lu, -1) + np.eye(self.n)

    def upper(self) -> np.ndarray:
        return np.triu(self.lu)

    def permutation_matrix(self) -> np.ndarray:
        p = np.zeros((self.n, self.n))
        p[np.arange(self.n), self.perm] = 1.0
        return p


def lu_factor(a, pivot_tol: float = PIVOT_TOL) -> LuFactors:
    """Factor ``P @ a = L @ U`` by Doolittle elimination with row pivoting.

    ``perm[i]`` is the row of ``a`` that ends up in row ``i``.
    """
    lu = np.array(a, dtype=float, copy=True)
    if lu.ndim != 2 or lu.shape[0] != lu.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {lu.shape}")
    if not np.all(np.isfinite(lu)):
        raise ValueError("matrix contains non-finite entries")
    n = lu.shape[0]
    perm = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        pivot = lu[p, k]
        if abs(pivot) <= pivot_tol:
            raise SingularMatrixError(k, pivot)
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        if k + 1 < n:
            lu[k + 1:, k] /= pivot
            lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return LuFactors(lu, perm)


def lu_solve(f: LuFactors, b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    if b.shape != (f.n,):
        raise DimensionMismatch(f"rhs has shape {b.shape}, system is {f.n}x{f.n}")
    lu = f.lu
    y = b[f.perm].copy()
    for i in range(1, f.n):
        y[i] -= lu[i, :i] @ y[:i]
    for i in range(f.n - 1, -1, -1):
        y[i] = (y[i] - lu[i, i + 1:] @ y[i + 1:]) / lu[i, i]
    return y


def solve(a, b, pivot_tol: float = PIVOT_TOL) -> np.ndarray:
    return lu_solve(lu_factor(a, pivot_tol), b)


def inf_norm(v) -> float:
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        return 0.0
    if v.ndim == 1:
        return float(np.max(np.abs(v)))
    return float(np.max(np.sum(np.abs(v), axis=1)))
