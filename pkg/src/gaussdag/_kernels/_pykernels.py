"""Pure-Python fallback for the compiled kernels (same algorithm, same order)."""
import math

import numpy as np

from gaussdag.errors import NotPositiveDefinite


def _factor(a, n, rel_tol):
    # a: list of row lists, factored in place; returns failing pivot or -1
    dmax = 0.0
    for i in range(n):
        if a[i][i] > dmax:
            dmax = a[i][i]
    tol = rel_tol * dmax
    for j in range(n):
        row_j = a[j]
        s = row_j[j]
        for k in range(j):
            s -= row_j[k] * row_j[k]
        if not s > tol:
            return j
        d = math.sqrt(s)
        row_j[j] = d
        for i in range(j + 1, n):
            row_i = a[i]
            s = row_i[j]
            for k in range(j):
                s -= row_i[k] * row_j[k]
            row_i[j] = s / d
    return -1


def cholesky_lower(a, rel_tol):
    arr = np.asarray(a, dtype=np.float64)
    n = arr.shape[0]
    if arr.ndim != 2 or arr.shape[1] != n:
        raise ValueError("matrix must be square")
    rows = arr.tolist()
    bad = _factor(rows, n, rel_tol)
    if bad >= 0:
        raise NotPositiveDefinite(f"non-positive pivot at index {bad}")
    out = np.array(rows, dtype=np.float64).reshape(n, n)
    return np.tril(out)


def logdet_principal(a, idx, rel_tol):
    arr = np.asarray(a, dtype=np.float64)
    n = arr.shape[0]
    ix = [int(i) for i in idx]
    for i in ix:
        if i < 0 or i >= n:
            raise IndexError(f"index {i} out of range for dimension {n}")
    if not ix:
        return 0.0
    rows = arr[np.ix_(ix, ix)].tolist()
    bad = _factor(rows, len(ix), rel_tol)
    if bad >= 0:
        raise NotPositiveDefinite(f"non-positive pivot at index {bad}")
    acc = 0.0
    for p in range(len(ix)):
        acc += math.log(rows[p][p])
    return 2.0 * acc
