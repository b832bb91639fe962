"""Geometry primitives against shapely and exact-arithmetic oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from critic_bench import geometry as geo

import oracles


def boxes(draw_x=st.floats(-20, 20), seed_label=""):
    return st.tuples(
        st.floats(-20, 20), st.floats(-20, 20), st.floats(-math.pi, math.pi),
        st.floats(0.5, 8.0), st.floats(0.5, 4.0),
    )


class TestAngles:
    @given(st.floats(-50, 50))
    def test_normalize_range(self, a):
        w = geo.normalize_angle(a)
        assert -math.pi < w <= math.pi
        assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)
        assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)

    def test_diff_shortest_arc(self):
        assert geo.angle_diff(math.pi - 0.1, -math.pi + 0.1) == pytest.approx(-0.2)
        assert geo.angle_diff(0.3, 0.1) == pytest.approx(0.2)

    def test_interp_crosses_pi(self):
        h = geo.interp_angle(math.pi - 0.1, -math.pi + 0.1, 0.5)
        assert abs(abs(h) - math.pi) < 1e-9


class TestPolyline:
    def test_cumlen(self):
        line = np.array([[0.0, 0.0], [3.0, 0.0], [3.0, 4.0]])
        assert np.allclose(geo.polyline_cumlen(line), [0.0, 3.0, 7.0])

    def test_projection_matches_shapely(self):
        rng = np.random.default_rng(7)
        line = np.cumsum(rng.uniform(-1, 2, size=(12, 2)), axis=0)
        pts = rng.uniform(-3, 10, size=(40, 2))
        s, d = geo.project_onto_polyline(pts, line)
        from shapely.geometry import LineString, Point
        ls = LineString(line)
        for k in range(len(pts)):
            assert d[k] == pytest.approx(ls.distance(Point(pts[k])), abs=1e-9)
            assert s[k] == pytest.approx(ls.project(Point(pts[k])), abs=1e-6)

    def test_point_at_and_tangent(self):
        line = np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0]])
        assert np.allclose(geo.polyline_point_at(line, 12.0), [10.0, 2.0])
        assert np.allclose(geo.polyline_tangent_at(line, 12.0), [0.0, 1.0])
        assert np.allclose(geo.polyline_point_at(line, 99.0), [10.0, 10.0])


class TestBoxOverlap:
    @settings(max_examples=300, deadline=None)
    @given(boxes(), boxes())
    def test_sat_matches_shapely(self, ba, bb):
        ca = geo.box_corners(*ba)
        cb = geo.box_corners(*bb)
        assert geo.boxes_overlap(ca, cb) == oracles.boxes_overlap_shapely(ca, cb)

    def test_many_matches_single(self):
        rng = np.random.default_rng(3)
        poses_a = rng.uniform(-10, 10, size=(50, 3))
        poses_b = rng.uniform(-10, 10, size=(50, 3))
        ca = geo.box_corners_many(poses_a, 4.5, 2.0)
        cb = geo.box_corners_many(poses_b, 3.0, 1.5)
        many = geo.boxes_overlap_many(ca, cb)
        for k in range(50):
            assert many[k] == geo.boxes_overlap(ca[k], cb[k])

    def test_touching_counts_as_overlap(self):
        ca = geo.box_corners(0.0, 0.0, 0.0, 2.0, 2.0)
        cb = geo.box_corners(2.0, 0.0, 0.0, 2.0, 2.0)
        assert geo.boxes_overlap(ca, cb)


class TestCast:
    @settings(max_examples=150, deadline=None)
    @given(boxes(), boxes(),
           st.tuples(st.floats(-10, 10), st.floats(-10, 10)),
           st.tuples(st.floats(-10, 10), st.floats(-10, 10)))
    def test_cast_matches_dense_sweep(self, ba, bb, va, vb):
        ca = geo.box_corners(*ba)
        cb = geo.box_corners(*bb)
        t_exact = geo.cast_boxes(ca, va, cb, vb, horizon=1.0)
        rel = (va[0] - vb[0], va[1] - vb[1])
        t_dense = oracles.earliest_contact_dense(
            oracles.obb_polygon(*ba), rel, oracles.obb_polygon(*bb), horizon=1.0)
        if t_exact is None:
            # a dense sweep may still clip a sub-millisecond graze the exact
            # test reports just past the horizon; require consistency instead
            assert t_dense is None or t_dense > 1.0 - 1e-3
        else:
            assert t_dense is not None
            assert t_dense >= t_exact - 1e-9
            assert t_dense <= t_exact + 1.1e-3

    def test_head_on_closing(self):
        ca = geo.box_corners(0.0, 0.0, 0.0, 4.0, 2.0)
        cb = geo.box_corners(20.0, 0.0, 0.0, 4.0, 2.0)
        t = geo.cast_boxes(ca, (10.0, 0.0), cb, (-10.0, 0.0), horizon=2.0)
        assert t == pytest.approx(0.8)  # 16 m gap closed at 20 m/s

    def test_already_overlapping(self):
        ca = geo.box_corners(0.0, 0.0, 0.0, 4.0, 2.0)
        cb = geo.box_corners(1.0, 0.0, 0.3, 4.0, 2.0)
        assert geo.cast_boxes(ca, (5.0, 0.0), cb, (0.0, 0.0), horizon=1.0) == 0.0

    def test_receding_never_hits(self):
        ca = geo.box_corners(0.0, 0.0, 0.0, 4.0, 2.0)
        cb = geo.box_corners(10.0, 0.0, 0.0, 4.0, 2.0)
        assert geo.cast_boxes(ca, (-5.0, 0.0), cb, (5.0, 0.0), horizon=4.0) is None


class TestPointInPolygon:
    def test_matches_exact_rational_on_boundary(self):
        poly = [(0, 0), (10, 0), (10, 6), (4, 6), (4, 3), (0, 3)]
        probes = [
            (5.0, 3.0), (4.0, 4.0), (0.0, 0.0), (10.0, 6.0), (2.0, 3.0),
            (4.0, 6.0), (5.0, 2.9999), (3.9999, 4.0), (11.0, 3.0), (2.0, 1.5),
        ]
        got = geo.points_in_polygon(np.array(probes, dtype=float), np.array(poly, dtype=float))
        for k, p in enumerate(probes):
            assert got[k] == oracles.point_in_polygon_exact(p, poly), p

    @settings(max_examples=200, deadline=None)
    @given(st.floats(-12, 12), st.floats(-12, 12))
    def test_matches_shapely_off_boundary(self, x, y):
        poly = np.array([(0, 0), (10, 0), (10, 6), (4, 6), (4, 3), (0, 3)], dtype=float)
        from shapely.geometry import Point, Polygon
        sp = Polygon(poly)
        if sp.boundary.distance(Point(x, y)) < 1e-6:
            return
        got = geo.points_in_polygon(np.array([[x, y]]), poly)[0]
        assert got == sp.covers(Point(x, y))

    def test_union_helper(self):
        polys = [np.array([(0, 0), (4, 0), (4, 4), (0, 4)], float),
                 np.array([(10, 0), (14, 0), (14, 4), (10, 4)], float)]
        pts = np.array([[2, 2], [12, 2], [7, 2]], dtype=float)
        assert list(geo.points_in_any_polygon(pts, polys)) == [True, True, False]


class TestPolygonSimple:
    def test_simple_and_bowtie(self):
        square = np.array([(0, 0), (4, 0), (4, 4), (0, 4)], float)
        bowtie = np.array([(0, 0), (4, 4), (4, 0), (0, 4)], float)
        assert geo.polygon_is_simple(square)
        assert not geo.polygon_is_simple(bowtie)


class TestFrames:
    def test_transform_round_trip(self):
        rng = np.random.default_rng(11)
        pts = rng.uniform(-30, 30, size=(20, 2))
        fx, fy, fh = 5.0, -3.0, 0.7
        local = geo.transform_to_frame(pts, fx, fy, fh)
        back = local @ geo.rotation_matrix(fh).T + np.array([fx, fy])
        assert np.allclose(back, pts, atol=1e-12)

    def test_forward_axis(self):
        # a point one meter ahead of the frame origin lands at (1, 0)
        out = geo.transform_to_frame(np.array([[math.cos(0.7), math.sin(0.7)]]), 0, 0, 0.7)
        assert np.allclose(out, [[1.0, 0.0]], atol=1e-12)
