"""Independent reference computations used to cross-check the fast paths.

Nothing here is on the production path: Fourier-Motzkin projection,
brute-force hulls and vertex enumeration, a grid-search minimax fit, the
centralized OP1 baseline and the sampling feasibility count.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from . import _kernels
from .formulation import build_op1, check_point_feasibility
from .lp import LpSolution, solve_lp
from .network import Interconnection, RegionNetwork


class FMEBlowup(RuntimeError):
    """Fourier-Motzkin input exceeds the size guard."""


# --- Fourier-Motzkin -----------------------------------------------------------


def _normalise(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    scale = np.abs(A).max(axis=1)
    scale[scale == 0] = 1.0
    return A / scale[:, None], b / scale


def _drop_duplicates(A, b, tol=1e-9):
    keep_A, keep_b = [], []
    for a_row, b_val in zip(A, b):
        dup = False
        for k, (q, c) in enumerate(zip(keep_A, keep_b)):
            if np.abs(a_row - q).max() <= tol:
                keep_b[k] = min(c, b_val)
                dup = True
                break
        if not dup:
            keep_A.append(a_row)
            keep_b.append(b_val)
    return np.array(keep_A).reshape(-1, A.shape[1]), np.array(keep_b)


def prune_redundant(A: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Remove rows implied by the others (LP test: maximise the row's lhs)."""
    A, b = _normalise(np.asarray(A, float), np.asarray(b, float))
    zero = np.abs(A).max(axis=1) <= 1e-12
    if np.any(b[zero] < -tol):
        raise ValueError("inequality system is infeasible")
    A, b = A[~zero], b[~zero]
    A, b = _drop_duplicates(A, b)
    keep = np.ones(len(b), dtype=bool)
    for i in range(len(b)):
        others = keep.copy()
        others[i] = False
        # row i stays in with a relaxed rhs so the LP is bounded whenever the set is
        A_ub = np.vstack([A[others], A[i]])
        b_ub = np.append(b[others], b[i] + 1.0)
        res = linprog(-A[i], A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * A.shape[1], method="highs")
        if res.status == 0 and -res.fun <= b[i] + tol:
            keep[i] = False
    return A[keep], b[keep]


def fourier_motzkin_project(
    A: np.ndarray,
    b: np.ndarray,
    n_keep: int,
    max_vars: int = 12,
    max_rows: int = 40,
) -> tuple[np.ndarray, np.ndarray]:
    """Project ``{y : A y <= b}`` onto its first ``n_keep`` coordinates.

    Trailing columns are eliminated one at a time; every pairwise
    combination of a positive and a negative row is formed and the result is
    pruned by LP before the next elimination.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.shape[1] > max_vars or A.shape[0] > max_rows:
        raise FMEBlowup(f"system {A.shape} exceeds the {max_rows}x{max_vars} guard")
    if A.shape[1] == n_keep:
        return A.copy(), b.copy()
    A, b = prune_redundant(A, b)
    for col in range(A.shape[1] - 1, n_keep - 1, -1):
        a = A[:, col]
        pos, neg, zer = np.flatnonzero(a > 1e-12), np.flatnonzero(a < -1e-12), np.flatnonzero(np.abs(a) <= 1e-12)
        rows = [A[i] for i in zer]
        rhs = [b[i] for i in zer]
        for p in pos:
            for n in neg:
                rows.append(A[p] * -a[n] + A[n] * a[p])
                rhs.append(b[p] * -a[n] + b[n] * a[p])
        A = np.array(rows).reshape(-1, A.shape[1])[:, :col]
        b = np.array(rhs)
        if A.shape[0]:
            A, b = prune_redundant(A, b)
    return A, b


# --- hulls and vertices --------------------------------------------------------


def enumerate_vertices(A: np.ndarray, b: np.ndarray, tol: float = 1e-7) -> np.ndarray:
    """All vertices of a bounded ``{y : A y <= b}`` by trying every d-row basis."""
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    d = A.shape[1]
    found: list[np.ndarray] = []
    for rows in itertools.combinations(range(A.shape[0]), d):
        M = A[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        y = np.linalg.solve(M, b[list(rows)])
        if np.all(A @ y <= b + tol * max(1.0, np.abs(y).max())):
            if not any(np.abs(y - q).max() <= 1e-7 * max(1.0, np.abs(y).max()) for q in found):
                found.append(y)
    return np.array(found).reshape(-1, d)


def brute_force_facets(points: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Facets of a full-dimensional point set by testing every d-subset hyperplane."""
    P = np.asarray(points, float)
    n, d = P.shape
    normals, offsets = [], []
    for combo in itertools.combinations(range(n), d):
        Q = P[list(combo)]
        E = Q[1:] - Q[0]
        _, s, vt = np.linalg.svd(E, full_matrices=True) if d > 1 else (None, None, np.eye(1))
        if d > 1 and s[-1] < 1e-10 * max(1.0, np.abs(E).max()):
            continue
        nrm = vt[-1]
        off = float(nrm @ Q[0])
        side = P @ nrm - off
        if np.all(side <= tol):
            pass
        elif np.all(side >= -tol):
            nrm, off = -nrm, -off
        else:
            continue
        if not any(np.abs(nrm - m).max() <= 1e-7 and abs(off - c) <= 1e-7 * max(1.0, abs(off)) for m, c in zip(normals, offsets)):
            normals.append(nrm)
            offsets.append(off)
    return np.array(normals), np.array(offsets)


def monte_carlo_volume(normals, offsets, lo, hi, n: int, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    pts = lo + rng.random((n, lo.size)) * (hi - lo)
    inside = _kernels.max_violation(pts, np.asarray(normals, float), np.asarray(offsets, float)) <= 0
    return float(inside.mean() * np.prod(hi - lo))


# --- minimax fit -----------------------------------------------------------------


def minmax_bruteforce(a, x_max, x_min=None, resolution: float = 1e-7) -> tuple[float, float, float]:
    """Grid search of the best uniform affine fit; inner max over box corners.

    The error is affine in ``x``, so its extremes sit at box corners; the
    outer search over the slope refines a uniform grid around the current
    best until the step is below ``resolution``.
    """
    a = np.asarray(a, float).ravel()
    hi = np.asarray(x_max, float).ravel()
    lo = np.zeros_like(hi) if x_min is None else np.asarray(x_min, float).ravel()
    w = hi - lo
    if a.size > 12:
        raise ValueError("brute force limited to 12 members")
    if a.size == 1 or not np.any(w > 0):
        a0 = float(a[0]) if a.size == 1 else float(a.min())
        return a0, float(np.sum((a - a0) * lo)), 0.0

    def err(slopes):
        top, bot = _kernels.box_error_range(a, w, slopes)
        return 0.5 * (top - bot), 0.5 * (top + bot)

    left, right = float(a.min()), float(a.max())
    if right - left <= resolution:
        slopes = np.array([left])
    else:
        while True:
            slopes = np.linspace(left, right, 2001)
            e, _ = err(slopes)
            k = int(np.argmin(e))
            step = slopes[1] - slopes[0]
            if step <= resolution:
                break
            left = max(float(a.min()), slopes[max(k - 2, 0)])
            right = min(float(a.max()), slopes[min(k + 2, slopes.size - 1)])
    e, centre = err(slopes)
    k = int(np.argmin(e))
    a0 = float(slopes[k])
    return a0, float(centre[k] + np.sum((a - a0) * lo)), float(e[k])


# --- centralized baseline --------------------------------------------------------


@dataclass
class Op1Result:
    solution: LpSolution
    objective: float
    z: dict = field(default_factory=dict)
    tie_power: dict = field(default_factory=dict)


def solve_centralized_op1(networks: Sequence[RegionNetwork], inter: Interconnection | None = None) -> Op1Result:
    op1 = build_op1(networks, inter)
    sol = solve_lp(op1.lp)
    z, pb = {}, {}
    if sol.ok:
        for rid, frag in op1.fragments.items():
            z[rid] = np.array([sol.x[v.z] for _, v in sorted(frag.periods.items())])
            pb[rid] = np.array([sol.x[v.pb] for _, v in sorted(frag.periods.items())])
    return Op1Result(solution=sol, objective=sol.objective if sol.ok else math.nan, z=z, tie_power=pb)


# --- sampling feasibility ----------------------------------------------------------


@dataclass
class SampleReport:
    total: int
    feasible: int
    infeasible: int
    seed: int
    tolerance: float
    infeasible_points: list = field(default_factory=list)

    def table(self) -> str:
        return (
            "                 Feasible point  Infeasible point\n"
            f"Number           {self.feasible:>14d}  {self.infeasible:>16d}\n"
            f"(total {self.total}, seed {self.seed}, tol {self.tolerance:g})"
        )


def sample_and_check(
    regions: Sequence,
    net: RegionNetwork,
    n: int,
    seed: int = 0,
    membership: np.ndarray | None = None,
    tol: float = 1e-6,
    max_report: int = 20,
    vertices: Sequence[np.ndarray] | None = None,
    subset: bool = True,
) -> SampleReport:
    """Dirichlet mixtures of region vertices checked against the full region.

    ``regions`` holds one projected region per period (in period order); a
    sample draws one mixture per period independently and checks the
    concatenated coupling point, ramps included. ``vertices`` overrides the
    vertex sets (used for deliberately distorted regions).

    With ``subset`` each mixture uses Dirichlet(1, ..., 1) weights over
    d + 1 vertices drawn at random instead of over all of them. Weights
    spread over many vertices pile up near the centroid; small simplices
    reach the boundary and still cover the whole hull.
    """
    rng = np.random.default_rng(seed)
    verts = [np.asarray(v, float) for v in (vertices if vertices is not None else [r.vertices for r in regions])]
    feasible = 0
    bad: list = []

    def mixture(V):
        if subset and len(V) > V.shape[1] + 1:
            V = V[rng.choice(len(V), V.shape[1] + 1, replace=False)]
        return rng.dirichlet(np.ones(len(V))) @ V

    for _ in range(n):
        pts = np.array([mixture(V) for V in verts])
        res = check_point_feasibility(net, pts[:, :-1], pts[:, -1], membership=membership, tol=tol)
        if res.feasible:
            feasible += 1
        elif len(bad) < max_report:
            bad.append(pts.tolist())
    return SampleReport(total=n, feasible=feasible, infeasible=n - feasible, seed=seed, tolerance=tol, infeasible_points=bad)
