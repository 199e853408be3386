"""Dual-representation polytopes built from point sets (Qhull underneath)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import _kernels

DEDUP_TOL = 1e-7
GEOM_TOL = 1e-7


@dataclass
class Polytope:
    """Convex hull of ``vertices`` with halfspaces ``normals @ y <= offsets``.

    ``origin``/``basis`` describe the affine hull; when ``dim`` is smaller
    than the ambient dimension the halfspace list also carries the pairs of
    rows pinning the body to that subspace. ``simplices`` triangulates the
    boundary (indices into ``vertices``) inside the affine hull.
    """

    vertices: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    tol: float = GEOM_TOL
    dim: int = 0
    origin: np.ndarray = field(default_factory=lambda: np.zeros(0))
    basis: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    simplices: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=int))

    @property
    def ambient_dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def degenerate(self) -> bool:
        return self.dim < self.ambient_dim

    @property
    def halfspaces(self) -> list[tuple[np.ndarray, float]]:
        return [(n, float(b)) for n, b in zip(self.normals, self.offsets)]

    def local(self, points: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(points) - self.origin) @ self.basis

    def slack(self, points: np.ndarray) -> np.ndarray:
        """Largest halfspace violation per point (``<= 0`` inside)."""
        return _kernels.max_violation(np.atleast_2d(np.asarray(points, dtype=float)), self.normals, self.offsets)

    def contains(self, points: np.ndarray, tol: float | None = None) -> np.ndarray:
        tol = self.tol * self.scale if tol is None else tol
        return self.slack(points) <= tol

    @property
    def scale(self) -> float:
        return max(1.0, float(np.abs(self.vertices).max(initial=0.0)))

    def volume(self) -> float:
        """Ambient volume; zero for a flat body."""
        if self.degenerate:
            return 0.0
        return self.intrinsic_volume()

    def intrinsic_volume(self) -> float:
        """Volume measured inside the affine hull (length, area, ...)."""
        if self.dim == 0:
            return 0.0
        u = self.local(self.vertices)
        if self.dim == 1:
            return float(u.max() - u.min())
        apex = u.mean(axis=0)
        return _kernels.fan_volume(u, self.simplices, apex)

    def facet_support(self, tol: float | None = None) -> np.ndarray:
        """Number of vertices tight on each halfspace."""
        tol = self.tol * self.scale if tol is None else tol
        s = self.vertices @ self.normals.T - self.offsets
        return (np.abs(s) <= tol).sum(axis=0)

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)


def dedup_points(points: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    """Drop points within ``tol`` (scaled by magnitude) of an earlier one."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    kept: list[np.ndarray] = []
    for p in pts:
        thr = tol * max(1.0, float(np.abs(p).max(initial=0.0)))
        if not any(np.abs(p - q).max() <= thr for q in kept):
            kept.append(p)
    return np.array(kept).reshape(-1, pts.shape[1])


def affine_hull(points: np.ndarray, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Origin and orthonormal basis (columns) of the affine hull of ``points``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    origin = pts.mean(axis=0)
    if pts.shape[0] == 1:
        return origin, np.zeros((pts.shape[1], 0))
    _, s, vt = np.linalg.svd(pts - origin, full_matrices=False)
    scale = max(1.0, float(np.abs(pts).max()))
    r = int(np.sum(s > tol * scale * np.sqrt(pts.shape[0])))
    return origin, vt[:r].T


def complement(basis: np.ndarray, d: int) -> np.ndarray:
    """Orthonormal basis (columns) of the orthogonal complement."""
    if basis.shape[1] == 0:
        return np.eye(d)
    q, _ = np.linalg.qr(np.hstack([basis, np.eye(d)]))
    return q[:, basis.shape[1] : d]


def convex_hull(points: np.ndarray, tol: float = GEOM_TOL) -> Polytope:
    """Hull with merged facets and outward unit normals.

    Lower-dimensional input is handled inside its affine hull; the result
    then has ``dim < ambient_dim`` and equality pairs in its halfspaces.
    """
    pts = dedup_points(points)
    if pts.shape[0] == 0:
        raise ValueError("convex hull of an empty point set")
    d = pts.shape[1]
    origin, basis = affine_hull(pts)
    r = basis.shape[1]
    u = (pts - origin) @ basis
    scale = max(1.0, float(np.abs(pts).max()))

    if r == 0:
        keep = np.array([0])
        sub_n, sub_b, simp = np.zeros((0, 0)), np.zeros(0), np.zeros((0, 0), dtype=int)
    elif r == 1:
        lo, hi = int(np.argmin(u[:, 0])), int(np.argmax(u[:, 0]))
        keep = np.array(sorted({lo, hi}))
        sub_n = np.array([[1.0], [-1.0]])
        sub_b = np.array([u[hi, 0], -u[lo, 0]])
        simp = np.zeros((0, 1), dtype=int)
    else:
        try:
            hull = ConvexHull(u)
        except QhullError:
            # nearly flat input: retry inside a coarser affine hull
            origin2, basis2 = affine_hull(pts, tol=1e-7)
            if basis2.shape[1] >= r:
                raise
            return convex_hull(origin2 + ((pts - origin2) @ basis2) @ basis2.T, tol)
        keep = np.array(sorted(hull.vertices))
        remap = {int(v): k for k, v in enumerate(keep)}
        simp = np.array([[remap[int(i)] for i in s] for s in hull.simplices], dtype=int)
        sub_n, sub_b = _merge_facets(hull.equations, tol * scale)
    verts = pts[keep]

    normals = [basis @ n for n in sub_n]
    offsets = [b + float((basis @ n) @ origin) for n, b in zip(sub_n, sub_b)]
    comp = complement(basis, d)
    for k in range(comp.shape[1]):
        c = comp[:, k]
        normals += [c, -c]
        offsets += [float(c @ origin), float(-c @ origin)]
    normals = np.array(normals).reshape(-1, d)
    offsets = np.array(offsets, dtype=float)
    if r == 0:
        simp = np.zeros((0, 0), dtype=int)
    return Polytope(
        vertices=verts,
        normals=normals,
        offsets=offsets,
        tol=tol,
        dim=r,
        origin=origin,
        basis=basis,
        simplices=simp,
    )


def _merge_facets(equations: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Qhull rows ``n.x + c <= 0`` to unique ``n.x <= b``."""
    normals, offsets = [], []
    for eq in equations:
        n, b = eq[:-1], -eq[-1]
        nn = np.linalg.norm(n)
        n, b = n / nn, b / nn
        dup = False
        for m, c in zip(normals, offsets):
            if np.abs(n - m).max() <= 1e-7 and abs(b - c) <= tol:
                dup = True
                break
        if not dup:
            normals.append(n)
            offsets.append(b)
    return np.array(normals), np.array(offsets)


def volume(poly: Polytope) -> float:
    return poly.volume()


def scale_about_centroid(poly: Polytope, factor: float) -> Polytope:
    c = poly.centroid()
    return convex_hull(c + factor * (poly.vertices - c), poly.tol)
