"""Numeric inner loops with a numba path and a pure-numpy fallback.

Set ``TIESEC_DISABLE_NUMBA=1`` to force the numpy implementations (useful
for debugging and for platforms without numba). Both paths are exported
under explicit names so the benchmark and tests can compare them.
"""

from __future__ import annotations

import math
import os

import numpy as np

_DISABLED = os.environ.get("TIESEC_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via env flag
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


# --- halfspace slack ---------------------------------------------------------


def max_violation_numpy(points: np.ndarray, normals: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Per point, ``max_k normals[k] . p - offsets[k]`` (<= 0 means inside)."""
    if normals.shape[0] == 0:
        return np.full(points.shape[0], -np.inf)
    return (points @ normals.T - offsets).max(axis=1)


@njit(cache=True)
def _max_violation_nb(points, normals, offsets):
    n, d = points.shape
    m = normals.shape[0]
    out = np.empty(n)
    for i in range(n):
        worst = -np.inf
        for k in range(m):
            s = -offsets[k]
            for j in range(d):
                s += normals[k, j] * points[i, j]
            if s > worst:
                worst = s
        out[i] = worst
    return out


def max_violation_numba(points, normals, offsets):
    return _max_violation_nb(
        np.ascontiguousarray(points, dtype=np.float64),
        np.ascontiguousarray(normals, dtype=np.float64),
        np.ascontiguousarray(offsets, dtype=np.float64),
    )


# --- simplex-fan volume ------------------------------------------------------


def fan_volume_numpy(points: np.ndarray, simplices: np.ndarray, apex: np.ndarray) -> float:
    """Sum of |det| / d! over simplices (facet, apex)."""
    if simplices.shape[0] == 0:
        return 0.0
    d = points.shape[1]
    edges = points[simplices] - apex
    return float(np.abs(np.linalg.det(edges)).sum() / math.factorial(d))


@njit(cache=True)
def _det_inplace(a):
    n = a.shape[0]
    det = 1.0
    for c in range(n):
        p = c
        best = abs(a[c, c])
        for r in range(c + 1, n):
            if abs(a[r, c]) > best:
                best = abs(a[r, c])
                p = r
        if best == 0.0:
            return 0.0
        if p != c:
            for k in range(n):
                tmp = a[c, k]
                a[c, k] = a[p, k]
                a[p, k] = tmp
            det = -det
        det *= a[c, c]
        for r in range(c + 1, n):
            f = a[r, c] / a[c, c]
            for k in range(c, n):
                a[r, k] -= f * a[c, k]
    return det


@njit(cache=True)
def _fan_volume_nb(points, simplices, apex):
    d = points.shape[1]
    total = 0.0
    work = np.empty((d, d))
    for s in range(simplices.shape[0]):
        for r in range(d):
            for c in range(d):
                work[r, c] = points[simplices[s, r], c] - apex[c]
        total += abs(_det_inplace(work))
    fact = 1.0
    for k in range(2, d + 1):
        fact *= k
    return total / fact


def fan_volume_numba(points, simplices, apex):
    if simplices.shape[0] == 0:
        return 0.0
    return float(
        _fan_volume_nb(
            np.ascontiguousarray(points, dtype=np.float64),
            np.ascontiguousarray(simplices, dtype=np.int64),
            np.ascontiguousarray(apex, dtype=np.float64),
        )
    )


# --- minimax box-vertex search ------------------------------------------------


def box_error_range_numpy(a: np.ndarray, w: np.ndarray, slopes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """For each trial slope, the max and min of ``sum (a_s - slope) x_s`` over box vertices.

    Vertices of ``0 <= x <= w`` are enumerated explicitly (2**S rows), so
    this stays independent of any sorting/median argument.
    """
    S = a.size
    corners = ((np.arange(2**S)[:, None] >> np.arange(S)) & 1).astype(float) * w
    vals = corners @ a[:, None] - corners.sum(axis=1)[:, None] * slopes[None, :]
    return vals.max(axis=0), vals.min(axis=0)


@njit(cache=True)
def _box_error_range_nb(a, w, slopes):
    S = a.size
    m = slopes.size
    hi = np.full(m, -np.inf)
    lo = np.full(m, np.inf)
    for mask in range(1 << S):
        ax = 0.0
        sx = 0.0
        for s in range(S):
            if (mask >> s) & 1:
                ax += a[s] * w[s]
                sx += w[s]
        for k in range(m):
            v = ax - slopes[k] * sx
            if v > hi[k]:
                hi[k] = v
            if v < lo[k]:
                lo[k] = v
    return hi, lo


def box_error_range_numba(a, w, slopes):
    return _box_error_range_nb(
        np.ascontiguousarray(a, dtype=np.float64),
        np.ascontiguousarray(w, dtype=np.float64),
        np.ascontiguousarray(slopes, dtype=np.float64),
    )


if HAVE_NUMBA:
    max_violation = max_violation_numba
    fan_volume = fan_volume_numba
    box_error_range = box_error_range_numba
else:
    max_violation = max_violation_numpy
    fan_volume = fan_volume_numpy
    box_error_range = box_error_range_numpy

BACKEND = "numba" if HAVE_NUMBA else "numpy"
