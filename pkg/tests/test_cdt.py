"""Triangulation kernel checks against hand-computed cases."""

import math

import numpy as np
import pytest

from damseep._cdt import (
    Triangulation,
    _edge_key,
    _incircle,
    _orient,
    refine,
    triangulate_pslg,
)
from damseep.errors import MeshingError


def _area_of(nodes, elements):
    p0 = nodes[elements[:, 0]]
    p1 = nodes[elements[:, 1]]
    p2 = nodes[elements[:, 2]]
    return 0.5 * np.abs(
        (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
        - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0])
    )


def _min_angle(nodes, elements):
    worst = 180.0
    for tri in elements:
        p = nodes[tri]
        for i in range(3):
            a, b, c = p[i], p[(i + 1) % 3], p[(i + 2) % 3]
            u, v = b - a, c - a
            cosang = np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v))
            worst = min(worst, math.degrees(math.acos(np.clip(cosang, -1, 1))))
    return worst


def test_orient_sign():
    assert _orient((0, 0), (1, 0), (0, 1)) > 0  # left turn
    assert _orient((0, 0), (1, 0), (1, -1)) < 0  # right turn
    assert _orient((0, 0), (1, 1), (2, 2)) == 0  # collinear


def test_incircle_sign():
    # unit circle through three points; origin is inside, (3, 0) outside
    a, b, c = (1, 0), (0, 1), (-1, 0)
    det_in, eps = _incircle(a, b, c, (0.0, 0.0))
    det_out, _ = _incircle(a, b, c, (3.0, 0.0))
    assert det_in > eps
    assert det_out < -eps


def test_square_two_triangles():
    pts = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    nodes, elements, segs = triangulate_pslg(
        pts, [(0, 1), (1, 2), (2, 3), (3, 0)], lambda xs, ys: np.full(np.shape(xs), 10.0)
    )
    assert len(nodes) == 4
    assert len(elements) == 2
    assert _area_of(nodes, elements).sum() == pytest.approx(1.0, abs=1e-12)
    assert set(segs) == {(0, 1), (1, 2), (2, 3), (0, 3)}


def test_refined_square_quality_and_area():
    pts = np.array([[0, 0], [2, 0], [2, 2], [0, 2]], dtype=float)
    nodes, elements, _ = triangulate_pslg(
        pts,
        [(0, 1), (1, 2), (2, 3), (3, 0)],
        lambda xs, ys: np.full(np.shape(xs), 0.4),
    )
    assert _area_of(nodes, elements).sum() == pytest.approx(4.0, rel=1e-12)
    assert _min_angle(nodes, elements) >= 20.0
    # size bound: no edge much longer than 1.5x the target
    for tri in elements:
        p = nodes[tri]
        for i in range(3):
            assert np.linalg.norm(p[(i + 1) % 3] - p[i]) <= 0.4 * 1.5 + 1e-9


def test_interior_constraint_is_preserved():
    # L-shaped domain with a dangling constraint inside
    pts = np.array(
        [[0, 0], [3, 0], [3, 1], [1, 1], [1, 3], [0, 3], [0.5, 0.5], [2.5, 0.5]],
        dtype=float,
    )
    boundary = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]
    nodes, elements, segs = triangulate_pslg(
        pts, boundary + [(6, 7)], lambda xs, ys: np.full(np.shape(xs), 0.5)
    )
    assert _area_of(nodes, elements).sum() == pytest.approx(5.0, rel=1e-12)
    assert _min_angle(nodes, elements) >= 20.0
    # every returned constrained pair must be an edge of some triangle
    edges = set()
    for tri in elements:
        for i in range(3):
            a, b = tri[i], tri[(i + 1) % 3]
            edges.add((min(a, b), max(a, b)))
    assert set(segs) <= edges
    # the dangling constraint survives as a chain along y = 0.5
    on_line = [tuple(sorted(e)) for e in segs if np.allclose(nodes[list(e), 1], 0.5)]
    xs = sorted(np.sort(nodes[list(e), 0])[0] for e in on_line)
    assert xs[0] == pytest.approx(0.5)


def test_sharp_wedge_terminates_at_its_input_angle():
    # 21.8 degree wedge: refinement must terminate and keep the corner angle
    ang = math.radians(21.8)
    pts = np.array(
        [[0, 0], [5, 0], [5, 5 * math.tan(ang)]],
        dtype=float,
    )
    nodes, elements, _ = triangulate_pslg(
        pts,
        [(0, 1), (1, 2), (2, 0)],
        lambda xs, ys: np.full(np.shape(xs), 1.0),
    )
    assert _min_angle(nodes, elements) >= 21.8 - 0.05


def test_too_sharp_corner_raises():
    # 8 degree sliver cannot satisfy a 20 degree floor
    ang = math.radians(8.0)
    pts = np.array([[0, 0], [4, 0], [4, 4 * math.tan(ang)]], dtype=float)
    with pytest.raises(MeshingError, match="refinement"):
        triangulate_pslg(
            pts,
            [(0, 1), (1, 2), (2, 0)],
            lambda xs, ys: np.full(np.shape(xs), 1.0),
            max_rounds=12,
        )


def test_duplicate_point_rejected_by_tolerance():
    tri = Triangulation(np.array([[0, 0], [1, 0], [0, 1]], dtype=float))
    before = len(tri.points)
    pid = tri.insert_point((0.0, 5e-10))  # within snap tolerance of vertex 0
    assert pid == 3  # vertex 0 is input index 0 -> internal id 3
    assert len(tri.points) == before


def test_constraint_recovery_by_flips():
    # the diagonal 0-2 is blocked by the Delaunay edge 1-3 until flipped in
    pts = np.array([[0, 0], [1, 0.05], [2, 0], [1, -0.05]], dtype=float)
    tri = Triangulation(pts)
    tri.recover_segment(3, 5)  # internal ids of inputs 0 and 2
    tri.constrained.add(_edge_key(3, 5))
    assert tri.edge_triangles(3, 5) or tri.edge_triangles(5, 3)
