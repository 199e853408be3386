"""Vertex-search projection of an LP-described set onto a few coordinates.

Seed with the per-coordinate extremes, hull them, then repeatedly push every
hull facet outward with one LP each until no facet moves (or the volume
stalls). Each vertex keeps the full LP point that produced it as a witness.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import Polytope, complement, convex_hull, dedup_points
from .lp import INFEASIBLE, UNBOUNDED, LpError, LpProblem, solve_lp

VOLUME_TOL = 1e-3
MAX_ITERS = 50
PUSH_TOL = 1e-7


class EmptyRegionError(LpError):
    """The set to project has no feasible point."""


class UnboundedRegionError(LpError):
    """A projection LP is unbounded; the set must be bounded."""


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("TIESEC_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class SecurityRegion:
    """Projected region with per-vertex witnesses.

    ``witness`` holds, row-aligned with ``polytope.vertices``, the full LP
    point that attained each vertex. ``columns`` maps witness part names
    (e.g. ``"pg"``, ``"theta"``) to column indices in that point.
    """

    polytope: Polytope
    witness: np.ndarray
    coords: np.ndarray
    columns: dict = field(default_factory=dict)
    converged: bool = True
    exact: bool = True
    iterations: int = 0
    volume_history: list = field(default_factory=list)
    region_id: object = None
    t: int = 0
    extra_witness: np.ndarray | None = None
    extra_owner: np.ndarray | None = None

    @property
    def vertices(self) -> np.ndarray:
        return self.polytope.vertices

    @property
    def n_vertices(self) -> int:
        return self.polytope.vertices.shape[0]

    def part(self, name: str) -> np.ndarray:
        """Witness block ``name`` for every vertex (vertices x columns)."""
        return self.witness[:, self.columns[name]]

    @property
    def n_extra(self) -> int:
        return 0 if self.extra_witness is None else self.extra_witness.shape[0]

    def pool(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All witnesses: ``(coordinates, points, owning vertex)``.

        Vertex witnesses come first; extra witnesses follow, with owner -1
        when they sit at a non-vertex point of the region.
        """
        owner = np.arange(self.n_vertices)
        W = self.witness
        if self.n_extra:
            owner = np.r_[owner, self.extra_owner]
            W = np.vstack([W, self.extra_witness])
        Y = W[:, self.coords].copy()
        Y[: self.n_vertices] = self.vertices
        return Y, W, owner

    def pool_part(self, name: str) -> np.ndarray:
        return self.pool()[1][:, self.columns[name]]


def _solve_direction(lp: LpProblem, coords: np.ndarray, direction: np.ndarray, sense: str):
    prob = lp.copy()
    prob.set_objective({int(c): float(v) for c, v in zip(coords, direction) if v != 0.0}, sense)
    sol = solve_lp(prob)
    if sol.status == INFEASIBLE:
        raise EmptyRegionError("projected set is empty", sol.status)
    if sol.status == UNBOUNDED:
        raise UnboundedRegionError("projection LP unbounded; the set must be bounded", sol.status)
    if not sol.ok:
        raise LpError(f"projection LP failed: {sol.message}", sol.status)
    return sol.x


def _map(fn, items):
    n = _threads()
    if n == 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def axis_extremes(lp: LpProblem, coords: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Minimise and maximise each projected coordinate; returns (points, witnesses)."""
    coords = np.asarray(coords, dtype=int)
    d = coords.size
    jobs = [(np.eye(d)[k], s) for k in range(d) for s in ("min", "max")]
    xs = _map(lambda job: _solve_direction(lp, coords, job[0], job[1]), jobs)
    X = np.array(xs)
    return X[:, coords], X


def facet_push(lp: LpProblem, coords: Sequence[int], normal: np.ndarray, offset: float, tol: float = PUSH_TOL):
    """Maximise ``normal . y`` over the set.

    Returns ``(point, witness, improved)``; ``improved`` is False when the
    optimum does not clear the facet offset by more than ``tol`` (scaled).
    """
    coords = np.asarray(coords, dtype=int)
    x = _solve_direction(lp, coords, np.asarray(normal, dtype=float), "max")
    y = x[coords]
    gain = float(np.dot(normal, y) - offset)
    return y, x, gain > tol * max(1.0, float(np.abs(y).max()), abs(offset))


def _hull_with_witness(points: np.ndarray, wit: np.ndarray) -> tuple[Polytope, np.ndarray]:
    poly = convex_hull(points)
    idx = [int(np.argmin(np.abs(points - v).max(axis=1))) for v in poly.vertices]
    return poly, wit[idx]


def _probe_flat(lp, coords, poly: Polytope, tol: float):
    """Points escaping the current affine hull, if any."""
    comp = complement(poly.basis, poly.ambient_dim)
    found_y, found_x = [], []
    for k in range(comp.shape[1]):
        c = comp[:, k]
        base = float(c @ poly.origin)
        for s in (1.0, -1.0):
            x = _solve_direction(lp, coords, s * c, "max")
            y = x[coords]
            if s * (float(c @ y) - base) > tol * max(1.0, float(np.abs(y).max())):
                found_y.append(y)
                found_x.append(x)
    return found_y, found_x


def _floor_points(lp, coords, poly: Polytope, k: int, tol: float):
    """Per-vertex minimisers of coordinate ``k`` lying below the hull."""
    others = np.delete(np.arange(coords.size), k)

    def lowest(v):
        prob = lp.copy()
        prob.fix(coords[others], v[others])
        prob.set_objective({int(coords[k]): 1.0}, "min")
        sol = solve_lp(prob)
        return sol.x if sol.ok else None

    found_y, found_x = [], []
    for v, x in zip(poly.vertices, _map(lowest, list(poly.vertices))):
        if x is None:
            continue
        y = x[coords]
        y[others] = v[others]
        x[coords] = y
        if v[k] - y[k] > tol * max(1.0, float(np.abs(v).max())) and not poly.contains(y)[0]:
            found_y.append(y)
            found_x.append(x)
    return found_y, found_x


def compute_region(
    lp: LpProblem,
    coords: Sequence[int],
    columns: dict | None = None,
    volume_tol: float = VOLUME_TOL,
    max_iters: int = MAX_ITERS,
    push_tol: float = PUSH_TOL,
    floor: int | None = None,
) -> SecurityRegion:
    """Inner polytope of the projection of ``lp`` onto ``coords``.

    Sweeps push every current facet; the loop stops when a sweep finds no
    new vertex (``exact``), when the relative volume gain of a sweep falls
    below ``volume_tol``, or after ``max_iters`` sweeps (``converged`` is
    then False). A flat projection is detected and explored inside its
    affine hull.

    Parameters
    ----------
    floor
        Position in ``coords`` of a coordinate to settle from below: after
        the sweeps, each vertex's other coordinates are held fixed and this
        one minimised, and the minimiser joins the hull when it lies lower.
        Every vertex then sits above a point of the region attaining the
        set's own infimum at those coordinates.
    """
    coords = np.asarray(coords, dtype=int)
    pts, wit = axis_extremes(lp, coords)

    # settle the affine hull before measuring volume
    while True:
        poly, wit = _hull_with_witness(pts, wit)
        if not poly.degenerate:
            break
        ny, nx = _probe_flat(lp, coords, poly, push_tol)
        if not ny:
            break
        pts = np.vstack([poly.vertices, ny])
        wit = np.vstack([wit, nx])

    history = [poly.intrinsic_volume()]
    converged, exact, it = False, False, 0
    while it < max_iters:
        it += 1
        n_facets = poly.normals.shape[0] - 2 * (poly.ambient_dim - poly.dim)
        facets = list(zip(poly.normals[:n_facets], poly.offsets[:n_facets]))
        results = _map(lambda f: facet_push(lp, coords, f[0], f[1], push_tol), facets)
        new_y = [y for y, _, ok in results if ok]
        new_x = [x for _, x, ok in results if ok]
        if not new_y:
            converged = exact = True
            break
        cand = np.vstack([poly.vertices, new_y])
        cand_w = np.vstack([wit, new_x])
        keep = dedup_points(cand)
        if keep.shape[0] == poly.vertices.shape[0]:
            converged = exact = True
            break
        poly, wit = _hull_with_witness(cand, cand_w)
        vol = poly.intrinsic_volume()
        prev = history[-1]
        history.append(vol)
        if vol > 0 and (vol - prev) / vol < volume_tol:
            converged = True
            break
    if floor is not None:
        ny, nx = _floor_points(lp, coords, poly, int(floor), push_tol)
        if ny:
            poly, wit = _hull_with_witness(np.vstack([poly.vertices, ny]), np.vstack([wit, nx]))
            history.append(poly.intrinsic_volume())
            exact = False
    return SecurityRegion(
        polytope=poly,
        witness=wit,
        coords=coords,
        columns=dict(columns or {}),
        converged=converged,
        exact=exact,
        iterations=it,
        volume_history=history,
    )


def pool_sites(region: SecurityRegion, sites: str = "facets") -> tuple[np.ndarray, np.ndarray]:
    """Points of the region at which extra witnesses are sought.

    ``"vertices"``: every vertex. ``"facets"``: additionally the mean of the
    vertices tight on each facet and the mean of all vertices. Returns the
    points and their owning vertex (-1 for non-vertex points).
    """
    V = region.vertices
    pts = [v for v in V]
    owner = list(range(V.shape[0]))
    if sites == "facets":
        P = region.polytope
        n_f = P.normals.shape[0] - 2 * (P.ambient_dim - P.dim)
        tol = P.tol * P.scale
        for nrm, off in zip(P.normals[:n_f], P.offsets[:n_f]):
            tight = np.abs(V @ nrm - off) <= tol
            if tight.sum() > 1:
                pts.append(V[tight].mean(axis=0))
                owner.append(-1)
        if V.shape[0] > 1:
            pts.append(V.mean(axis=0))
            owner.append(-1)
    elif sites != "vertices":
        raise ValueError(f"unknown pool sites {sites!r}")
    return np.array(pts).reshape(-1, V.shape[1]), np.array(owner, dtype=int)


def anchor_point(lp: LpProblem, region: SecurityRegion, zero: str = "pt", lowest: str = "z") -> np.ndarray | None:
    """Coordinates of the point with ``zero`` columns at 0 and ``lowest`` minimal.

    For a region this is the stand-alone operating point: no exchange and
    least curtailment. ``None`` when it is infeasible or outside the region.
    """
    prob = lp.copy()
    zc = np.asarray(region.columns[zero], dtype=int).ravel()
    prob.fix(zc, np.zeros(zc.size))
    prob.set_objective({int(c): 1.0 for c in np.asarray(region.columns[lowest]).ravel()}, "min")
    sol = solve_lp(prob)
    if not sol.ok:
        return None
    y = sol.x[region.coords]
    if not region.polytope.contains(y)[0]:
        return None
    return y


def enrich_witnesses(
    lp: LpProblem,
    region: SecurityRegion,
    parts: Sequence[str] = ("theta", "pb"),
    sites: str = "facets",
    anchor: bool = True,
) -> SecurityRegion:
    """Add feasible points extreme in each listed column at the pool sites.

    The site coordinates are held fixed, so every extra point projects onto
    its site; convex combinations of the pool stay inside the set. With
    ``anchor`` the zero-exchange, least-curtailment point is a site too.
    Directions whose LP fails are skipped.
    """
    cols = np.unique(np.concatenate([np.asarray(region.columns[p], dtype=int).ravel() for p in parts]))
    extra, owner = [], []
    pts, own = pool_sites(region, sites)
    if anchor and "pt" in region.columns and "z" in region.columns:
        y0 = anchor_point(lp, region)
        if y0 is not None:
            pts = np.vstack([pts, y0])
            own = np.r_[own, -1]
    for y, o in zip(pts, own):
        base = lp.copy()
        base.fix(region.coords, y)
        found = [region.witness[o]] if o >= 0 else []
        for c in cols:
            for sense in ("min", "max"):
                prob = base.copy()
                prob.set_objective({int(c): 1.0}, sense)
                sol = solve_lp(prob)
                if not sol.ok:
                    continue
                x = sol.x
                x[region.coords] = y
                thr = PUSH_TOL * max(1.0, float(np.abs(x).max()))
                if all(np.abs(x - q).max() > thr for q in found):
                    found.append(x)
                    extra.append(x)
                    owner.append(int(o))
    n = region.witness.shape[1]
    region.extra_witness = np.array(extra).reshape(-1, n)
    region.extra_owner = np.array(owner, dtype=int)
    return region
