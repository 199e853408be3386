from __future__ import annotations

import itertools

import numpy as np
import pytest

from tiesec.geometry import convex_hull, dedup_points, scale_about_centroid, volume
from tiesec.oracles import brute_force_facets, monte_carlo_volume


def test_triangle_has_three_halfspaces():
    P = convex_hull(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    assert P.normals.shape == (3, 2) and P.dim == 2
    assert volume(P) == pytest.approx(0.5)


def test_unit_cube():
    pts = np.array(list(itertools.product([0.0, 1.0], repeat=3)))
    P = convex_hull(pts)
    assert P.normals.shape[0] == 6
    assert volume(P) == pytest.approx(1.0)
    assert np.all(P.facet_support() == 4)


def test_ball_points_match_brute_force_facets():
    rng = np.random.default_rng(7)
    pts = rng.normal(size=(50, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    pts *= rng.uniform(0.2, 1.0, (50, 1))
    P = convex_hull(pts)
    N, c = brute_force_facets(pts)
    assert N.shape[0] == P.normals.shape[0]
    assert np.all(P.vertices @ N.T <= c + 1e-9)
    assert np.all(P.contains(pts))
    # the oracle's tight points are exactly the hull's vertices
    tight = np.flatnonzero(np.any(np.abs(pts @ N.T - c) <= 1e-9, axis=1))
    assert len(tight) == P.vertices.shape[0]


def test_monte_carlo_volume_agrees():
    rng = np.random.default_rng(1)
    P = convex_hull(rng.uniform(-1, 1, (30, 3)))
    lo, hi = P.vertices.min(axis=0), P.vertices.max(axis=0)
    mc = monte_carlo_volume(P.normals, P.offsets, lo, hi, 10**6, seed=3)
    assert abs(mc - volume(P)) <= 0.02 * volume(P)


def test_flat_input_is_reported_not_fatal():
    pts = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 1.0, 1.0]])
    P = convex_hull(pts)
    assert P.degenerate and P.dim == 2
    assert volume(P) == 0.0
    assert P.intrinsic_volume() == pytest.approx(1.0)
    assert np.all(P.contains(pts))
    assert not P.contains(np.array([[0.5, 0.5, 1.1]]))[0]


def test_segment_and_point():
    seg = convex_hull(np.array([[0.0, 0.0], [2.0, 2.0], [1.0, 1.0]]))
    assert seg.dim == 1 and seg.vertices.shape[0] == 2
    assert seg.intrinsic_volume() == pytest.approx(np.sqrt(8.0))
    pt = convex_hull(np.array([[3.0, 4.0], [3.0, 4.0]]))
    assert pt.dim == 0 and pt.vertices.shape[0] == 1


def test_dedup_scales_with_magnitude():
    pts = np.array([[1e6, 0.0], [1e6 + 0.01, 0.0], [0.0, 0.0], [1e-9, 0.0]])
    assert dedup_points(pts).shape[0] == 2


def test_inflation_keeps_centroid():
    P = convex_hull(np.array(list(itertools.product([0.0, 1.0], repeat=2))))
    Q = scale_about_centroid(P, 1.5)
    assert volume(Q) == pytest.approx(2.25)
    np.testing.assert_allclose(Q.centroid(), P.centroid())
