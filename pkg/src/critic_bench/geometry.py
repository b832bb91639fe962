"""Planar geometry primitives shared by the scoring engine and renderer.

Conventions: right-handed ego frame with +x forward and +y left, headings
in radians measured counter-clockwise from +x. Polylines and polygons are
float arrays of shape (N, 2); polygons are implicitly closed.
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def normalize_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a, TWO_PI)
    if a > math.pi:
        a -= TWO_PI
    elif a <= -math.pi:
        a += TWO_PI
    return a


def angle_diff(a: float, b: float) -> float:
    """Shortest signed difference a - b, in (-pi, pi]."""
    return normalize_angle(a - b)


def interp_angle(a: float, b: float, u: float) -> float:
    """Interpolate from a to b along the shortest arc, u in [0, 1]."""
    return normalize_angle(a + angle_diff(b, a) * u)


def rotation_matrix(heading: float) -> np.ndarray:
    c, s = math.cos(heading), math.sin(heading)
    return np.array([[c, -s], [s, c]])


def transform_to_frame(points: np.ndarray, frame_x: float, frame_y: float, frame_heading: float) -> np.ndarray:
    """Express map-frame points in the frame anchored at the given pose."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    shifted = pts - np.array([frame_x, frame_y])
    return shifted @ rotation_matrix(frame_heading)  # R(-h) applied on the right


def polyline_cumlen(polyline: np.ndarray) -> np.ndarray:
    """Cumulative arc length at each vertex, starting at 0."""
    seg = np.diff(polyline, axis=0)
    return np.concatenate([[0.0], np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))])


def project_onto_polyline(points: np.ndarray, polyline: np.ndarray):
    """Project points onto a polyline.

    Returns (s, d): arc-length coordinate of the closest polyline point and
    the unsigned distance to it, both shape (M,). Points beyond the ends
    project onto the end vertices.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    poly = np.asarray(polyline, dtype=float)
    a = poly[:-1]                       # (S, 2) segment starts
    b = poly[1:]                        # (S, 2) segment ends
    ab = b - a
    ab_len2 = np.einsum("ij,ij->i", ab, ab)
    ab_len2 = np.where(ab_len2 == 0.0, 1.0, ab_len2)

    ap = pts[:, None, :] - a[None, :, :]            # (M, S, 2)
    u = np.einsum("msj,sj->ms", ap, ab) / ab_len2   # (M, S)
    u = np.clip(u, 0.0, 1.0)
    closest = a[None, :, :] + u[:, :, None] * ab[None, :, :]
    dist = np.hypot(*(pts[:, None, :] - closest).transpose(2, 0, 1))

    best = np.argmin(dist, axis=1)                  # (M,)
    rows = np.arange(pts.shape[0])
    cum = polyline_cumlen(poly)
    seg_len = np.sqrt(np.where(ab_len2 == 1.0, np.einsum("ij,ij->i", ab, ab), ab_len2))
    s = cum[best] + u[rows, best] * seg_len[best]
    return s, dist[rows, best]


def point_to_polyline_distance(point, polyline: np.ndarray) -> float:
    _, d = project_onto_polyline(np.asarray([point], dtype=float), polyline)
    return float(d[0])


def polyline_point_at(polyline: np.ndarray, s: float) -> np.ndarray:
    """Point at arc-length s, clamped to the polyline extent."""
    cum = polyline_cumlen(polyline)
    s = min(max(s, 0.0), float(cum[-1]))
    i = int(np.searchsorted(cum, s, side="right")) - 1
    i = min(max(i, 0), len(polyline) - 2)
    seg = cum[i + 1] - cum[i]
    u = 0.0 if seg == 0.0 else (s - cum[i]) / seg
    return polyline[i] + u * (polyline[i + 1] - polyline[i])


def polyline_tangent_at(polyline: np.ndarray, s: float) -> np.ndarray:
    """Unit tangent of the segment containing arc-length s."""
    cum = polyline_cumlen(polyline)
    s = min(max(s, 0.0), float(cum[-1]))
    i = int(np.searchsorted(cum, s, side="right")) - 1
    i = min(max(i, 0), len(polyline) - 2)
    d = polyline[i + 1] - polyline[i]
    n = math.hypot(d[0], d[1])
    return d / n if n > 0 else np.array([1.0, 0.0])


def box_corners(x: float, y: float, heading: float, length: float, width: float) -> np.ndarray:
    """Corners of an oriented box, CCW order, shape (4, 2)."""
    hl, hw = length / 2.0, width / 2.0
    local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
    return local @ rotation_matrix(heading).T + np.array([x, y])


def box_corners_many(poses: np.ndarray, length: float, width: float) -> np.ndarray:
    """Corners for pose rows (x, y, heading), shape (T, 4, 2)."""
    poses = np.asarray(poses, dtype=float)
    hl, hw = length / 2.0, width / 2.0
    local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])  # (4, 2)
    c, s = np.cos(poses[:, 2]), np.sin(poses[:, 2])
    rot = np.stack([np.stack([c, -s], axis=1), np.stack([s, c], axis=1)], axis=1)  # (T, 2, 2)
    return np.einsum("tij,kj->tki", rot, local) + poses[:, None, :2]


def _box_axes(corners: np.ndarray) -> np.ndarray:
    """Two edge-direction axes per box; corners (..., 4, 2) -> (..., 2, 2)."""
    e0 = corners[..., 1, :] - corners[..., 0, :]
    e1 = corners[..., 2, :] - corners[..., 1, :]
    return np.stack([e0, e1], axis=-2)


def boxes_overlap(corners_a: np.ndarray, corners_b: np.ndarray) -> bool:
    """Separating-axis overlap test for two oriented boxes (touching counts)."""
    return bool(boxes_overlap_many(corners_a[None], corners_b[None])[0])


def boxes_overlap_many(corners_a: np.ndarray, corners_b: np.ndarray) -> np.ndarray:
    """Pairwise SAT test over matched box arrays of shape (T, 4, 2)."""
    axes = np.concatenate([_box_axes(corners_a), _box_axes(corners_b)], axis=1)  # (T, 4, 2)
    pa = np.einsum("tkj,taj->tak", corners_a, axes)  # (T, 4 axes, 4 corners)
    pb = np.einsum("tkj,taj->tak", corners_b, axes)
    separated = (pa.max(axis=2) < pb.min(axis=2)) | (pb.max(axis=2) < pa.min(axis=2))
    return ~separated.any(axis=1)


def cast_boxes(corners_a: np.ndarray, vel_a, corners_b: np.ndarray, vel_b, horizon: float):
    """Earliest contact time of two constant-velocity, non-rotating boxes.

    Returns the first t in [0, horizon] at which the boxes overlap, or None.
    Exact in continuous time: each SAT axis yields a linear interval sweep.
    """
    vr = np.asarray(vel_a, dtype=float) - np.asarray(vel_b, dtype=float)
    axes = np.concatenate([_box_axes(corners_a[None])[0], _box_axes(corners_b[None])[0]])  # (4, 2)
    t_enter, t_exit = 0.0, horizon
    for axis in axes:
        pa = corners_a @ axis
        pb = corners_b @ axis
        speed = float(vr @ axis)
        lo, hi = pa.min(), pa.max()
        blo, bhi = pb.min(), pb.max()
        if speed == 0.0:
            if hi < blo or bhi < lo:
                return None
            continue
        # overlap requires lo + speed*t <= bhi and hi + speed*t >= blo
        t0 = (blo - hi) / speed
        t1 = (bhi - lo) / speed
        if t0 > t1:
            t0, t1 = t1, t0
        t_enter = max(t_enter, t0)
        t_exit = min(t_exit, t1)
        if t_enter > t_exit:
            return None
    return t_enter


def points_in_polygon(points: np.ndarray, polygon: np.ndarray, eps: float = 1e-9) -> np.ndarray:
    """Boundary-inclusive point-in-polygon test, vectorized over points."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    poly = np.asarray(polygon, dtype=float)
    x, y = pts[:, 0:1], pts[:, 1:2]
    x1, y1 = poly[:, 0][None, :], poly[:, 1][None, :]
    x2 = np.roll(poly[:, 0], -1)[None, :]
    y2 = np.roll(poly[:, 1], -1)[None, :]

    cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
    within = (
        (x >= np.minimum(x1, x2) - eps)
        & (x <= np.maximum(x1, x2) + eps)
        & (y >= np.minimum(y1, y2) - eps)
        & (y <= np.maximum(y1, y2) + eps)
    )
    scale = np.maximum(np.abs(x2 - x1), np.abs(y2 - y1)) + 1.0
    on_edge = (np.abs(cross) <= eps * scale) & within

    crosses = ((y1 > y) != (y2 > y)) & (x < x1 + (y - y1) * (x2 - x1) / np.where(y2 == y1, 1.0, y2 - y1))
    inside = (crosses.sum(axis=1) % 2) == 1
    return inside | on_edge.any(axis=1)


def points_in_any_polygon(points: np.ndarray, polygons) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    result = np.zeros(pts.shape[0], dtype=bool)
    for poly in polygons:
        pending = ~result
        if not pending.any():
            break
        result[pending] = points_in_polygon(pts[pending], np.asarray(poly, dtype=float))
    return result


def polygon_is_simple(polygon: np.ndarray) -> bool:
    """True when no two non-adjacent edges intersect."""
    poly = np.asarray(polygon, dtype=float)
    n = len(poly)
    if n < 3:
        return False

    def cross2(u, v):
        return u[0] * v[1] - u[1] * v[0]

    def seg_intersect(p1, p2, p3, p4):
        d1 = cross2(p4 - p3, p1 - p3)
        d2 = cross2(p4 - p3, p2 - p3)
        d3 = cross2(p2 - p1, p3 - p1)
        d4 = cross2(p2 - p1, p4 - p1)
        return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))

    for i in range(n):
        a1, a2 = poly[i], poly[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if seg_intersect(a1, a2, poly[j], poly[(j + 1) % n]):
                return False
    return True
