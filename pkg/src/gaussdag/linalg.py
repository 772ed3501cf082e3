"""Dense symmetric positive-definite kernel.

Matrices are plain ``numpy`` arrays. Positive-definiteness is established by
Cholesky success with a scale-invariant pivot tolerance: a pivot at or below
``PIVOT_RTOL * max(diag)`` is rejected. All determinant work is done in log
space.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from gaussdag import _kernels
from gaussdag.errors import (
    EmptyIndexSet,
    IndexOutOfRange,
    InvalidIndexSet,
    NotPositiveDefinite,
)

PIVOT_RTOL = 1e-12


def _as_square(a) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def symmetrize(a) -> np.ndarray:
    """Mirror the lower triangle onto the upper one."""
    arr = _as_square(a)
    return np.tril(arr) + np.tril(arr, -1).T


def cholesky(a) -> np.ndarray:
    """Lower Cholesky factor ``L`` with ``L @ L.T == a``.

    Raises
    ------
    NotPositiveDefinite
        If any pivot is at or below ``PIVOT_RTOL`` times the largest diagonal
        entry.
    """
    arr = _as_square(a)
    if arr.shape[0] and not np.allclose(arr, arr.T, rtol=1e-12, atol=0.0):
        raise ValueError("matrix is not symmetric")
    return _kernels.cholesky_lower(arr, PIVOT_RTOL)


def is_positive_definite(a) -> bool:
    try:
        cholesky(a)
    except NotPositiveDefinite:
        return False
    return True


def is_positive_semidefinite(a, rtol: float = 1e-10) -> bool:
    """Tolerant check used for scatter matrices.

    Runs an outer-product Cholesky that skips pivots within ``rtol`` of zero
    (relative to the largest diagonal) and fails only on a clearly negative
    pivot.
    """
    arr = _as_square(a).copy()
    n = arr.shape[0]
    if n == 0:
        return True
    scale = max(float(np.max(np.abs(np.diag(arr)))), 1e-300)
    tol = rtol * scale
    for j in range(n):
        d = arr[j, j]
        if d < -tol:
            return False
        if d <= tol:
            if np.any(np.abs(arr[j + 1:, j]) > np.sqrt(tol * scale)):
                return False
            continue
        col = arr[j + 1:, j] / np.sqrt(d)
        arr[j + 1:, j + 1:] -= np.outer(col, col)
    return True


def log_det(a) -> float:
    """Log-determinant of a positive-definite matrix via its Cholesky factor."""
    lower = cholesky(a)
    return float(2.0 * np.sum(np.log(np.diag(lower))))


def check_index_set(idx: Sequence[int], n: int) -> np.ndarray:
    ix = np.asarray(list(idx), dtype=np.intp)
    if ix.size == 0:
        raise EmptyIndexSet("index set is empty")
    if ix.min() < 0 or ix.max() >= n:
        raise IndexOutOfRange(f"index set {ix.tolist()} outside [0, {n})")
    if np.any(np.diff(ix) <= 0):
        raise InvalidIndexSet(f"index set {ix.tolist()} is not strictly increasing")
    return ix


def principal_submatrix(a, idx: Sequence[int]) -> np.ndarray:
    arr = _as_square(a)
    ix = check_index_set(idx, arr.shape[0])
    return arr[np.ix_(ix, ix)].copy()


def log_det_principal(a, idx: Sequence[int]) -> float:
    """``log_det(principal_submatrix(a, idx))`` without the intermediate copy.

    This is the inner-loop kernel of scoring; it dispatches to the compiled
    backend when available. ``idx`` must already be a valid, sorted set.
    """
    try:
        return _kernels.logdet_principal(a, idx, PIVOT_RTOL)
    except IndexError as exc:
        raise IndexOutOfRange(str(exc)) from None


def cho_solve(lower: np.ndarray, b) -> np.ndarray:
    """Solve ``(L L^T) x = b`` given the lower factor."""
    y = solve_triangular(lower, b, lower=True)
    return solve_triangular(lower.T, y, lower=False)


def inverse(a) -> np.ndarray:
    lower = cholesky(a)
    inv = cho_solve(lower, np.eye(lower.shape[0]))
    return symmetrize(inv)


def schur_complement(w, block1: Sequence[int], block2: Sequence[int]) -> np.ndarray:
    """``W11 - W12 W22^{-1} W12^T`` for a disjoint cover ``block1 | block2``.

    Equivalently ``((W^{-1})_{11})^{-1}``, the precision of the block-1
    marginal. An empty ``block2`` returns ``W11``.
    """
    arr = _as_square(w)
    n = arr.shape[0]
    b1 = check_index_set(sorted(block1), n)
    b2 = sorted(block2)
    if set(b1.tolist()) & set(b2):
        raise InvalidIndexSet("blocks overlap")
    if len(b1) + len(b2) != n:
        raise InvalidIndexSet("blocks do not cover all indices")
    w11 = arr[np.ix_(b1, b1)]
    if not b2:
        return w11.copy()
    b2 = check_index_set(b2, n)
    w12 = arr[np.ix_(b1, b2)]
    lower = cholesky(arr[np.ix_(b2, b2)])
    half = solve_triangular(lower, w12.T, lower=True)
    return symmetrize(w11 - half.T @ half)
