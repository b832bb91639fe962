"""Independent reference implementations used only by tests.

Every oracle recomputes a result by brute force, exact arithmetic, or an
unrelated geometry library (shapely) so engine outputs can be validated
against code that shares no predicate logic with the package. Trajectory
pose interpolation is deliberately shared (it is the definition of the
input signal, not the thing under test).
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
import shapely
from shapely import affinity
from shapely.geometry import LineString, Point, Polygon
from shapely.ops import unary_union

from critic_bench.scenes import Scene, Trajectory, sample_trajectory

FINE_DT = 0.001


def obb_polygon(x, y, heading, length, width) -> Polygon:
    rect = Polygon([(-length / 2, -width / 2), (length / 2, -width / 2),
                    (length / 2, width / 2), (-length / 2, width / 2)])
    rect = affinity.rotate(rect, heading, origin=(0, 0), use_radians=True)
    return affinity.translate(rect, x, y)


def obb_corners_many(poses: np.ndarray, length: float, width: float) -> np.ndarray:
    """Box corners per pose row via complex rotation, shape (T, 4, 2)."""
    poses = np.asarray(poses, dtype=float)
    z0 = poses[:, 0] + 1j * poses[:, 1]
    rot = np.exp(1j * poses[:, 2])
    offs = np.array([length + 1j * width, -length + 1j * width,
                     -length - 1j * width, length - 1j * width]) / 2.0
    zs = z0[:, None] + rot[:, None] * offs[None, :]
    return np.stack([zs.real, zs.imag], axis=2)


def boxes_overlap_shapely(corners_a, corners_b) -> bool:
    return Polygon(corners_a).intersects(Polygon(corners_b))


def point_in_polygon_exact(point, polygon) -> bool:
    """Boundary-inclusive point-in-polygon with exact rational arithmetic."""
    px, py = Fraction(point[0]), Fraction(point[1])
    verts = [(Fraction(x), Fraction(y)) for x, y in polygon]
    n = len(verts)
    inside = False
    for i in range(n):
        (x1, y1), (x2, y2) = verts[i], verts[(i + 1) % n]
        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        if cross == 0 and min(x1, x2) <= px <= max(x1, x2) and min(y1, y2) <= py <= max(y1, y2):
            return True
        if (y1 > py) != (y2 > py):
            x_at = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if px < x_at:
                inside = not inside
    return inside


# --- scene-level brute-force checkers --------------------------------------


def _ego_frame_samples(scene: Scene, traj: Trajectory, dt: float):
    scene = scene.in_ego_frame()
    samples = sample_trajectory(traj, dt)
    vel = np.diff(samples[:, :2], axis=0) / dt
    vel = np.vstack([vel, vel[-1]])
    return scene, samples, vel


def _agent_track(agent, times: np.ndarray) -> np.ndarray:
    c = agent.box.center
    return np.stack([
        c.x + agent.velocity[0] * times,
        c.y + agent.velocity[1] * times,
        np.full_like(times, c.heading),
    ], axis=1)


def nc_bruteforce(scene: Scene, traj: Trajectory, config, dt: float = FINE_DT) -> float:
    """No-at-fault-collision at 1 ms steps with shapely overlap tests."""
    scene, samples, vel = _ego_frame_samples(scene, traj, dt)
    times = np.arange(len(samples)) * dt
    length, width = scene.ego_box_dims
    for agent in scene.agents:
        track = _agent_track(agent, times)
        r = 0.5 * (math.hypot(length, width) + math.hypot(agent.box.length, agent.box.width))
        near = np.hypot(track[:, 0] - samples[:, 0], track[:, 1] - samples[:, 1]) <= r + 1e-9
        idx = np.flatnonzero(near)
        if idx.size == 0:
            continue
        ego_polys = shapely.polygons(obb_corners_many(samples[idx], length, width))
        agent_polys = shapely.polygons(obb_corners_many(track[idx], agent.box.length, agent.box.width))
        hit = shapely.intersects(ego_polys, agent_polys)
        for k in idx[hit]:
            toward = track[k, :2] - samples[k, :2]
            if float(vel[k] @ toward) > 1e-9:
                return 0.0
    return 1.0


def dac_bruteforce(scene: Scene, traj: Trajectory, dt: float = FINE_DT) -> float:
    """All ego corners inside the drivable union at 1 ms steps (shapely covers)."""
    scene, samples, _ = _ego_frame_samples(scene, traj, dt)
    union = unary_union([Polygon(p) for p in scene.map.drivable_area])
    shapely.prepare(union)
    corners = obb_corners_many(samples, *scene.ego_box_dims).reshape(-1, 2)
    return 1.0 if shapely.covers(union, shapely.points(corners)).all() else 0.0


def earliest_contact_dense(poly_a: Polygon, vel_rel, poly_b: Polygon, horizon: float,
                           dt: float = FINE_DT):
    """First grid time in [0, horizon] where poly_a shifted by vel_rel*t hits poly_b."""
    taus = np.arange(0.0, horizon + dt / 2, dt)
    ca = np.array(poly_a.centroid.coords[0])
    cb = np.array(poly_b.centroid.coords[0])
    ra = max(math.hypot(x - ca[0], y - ca[1]) for x, y in poly_a.exterior.coords)
    rb = max(math.hypot(x - cb[0], y - cb[1]) for x, y in poly_b.exterior.coords)
    centers = ca[None, :] + np.asarray(vel_rel, dtype=float)[None, :] * taus[:, None]
    near = np.hypot(centers[:, 0] - cb[0], centers[:, 1] - cb[1]) <= ra + rb + 1e-9
    if not near.any():
        return None
    base = np.asarray(poly_a.exterior.coords, dtype=float)[:4]
    shifted = base[None, :, :] + np.asarray(vel_rel, dtype=float)[None, None, :] * taus[near, None, None]
    hit = shapely.intersects(shapely.polygons(shifted), poly_b)
    if not hit.any():
        return None
    return float(taus[near][hit][0])


def ttc_bruteforce(scene: Scene, traj: Trajectory, config, dt: float = FINE_DT) -> float:
    """Projected-overlap check: dense time sweep per simulation sample."""
    scene, samples, vel = _ego_frame_samples(scene, traj, config.sim_step)
    times = np.arange(len(samples)) * config.sim_step
    length, width = scene.ego_box_dims
    speeds = np.hypot(vel[:, 0], vel[:, 1])
    for agent in scene.agents:
        track = _agent_track(agent, times)
        av = np.asarray(agent.velocity, dtype=float)
        rel = vel - av[None, :]
        reach = 0.5 * (math.hypot(length, width) + math.hypot(agent.box.length, agent.box.width))
        dist = np.hypot(track[:, 0] - samples[:, 0], track[:, 1] - samples[:, 1])
        cand = np.flatnonzero((speeds > 1e-9) &
                              (dist <= reach + np.hypot(rel[:, 0], rel[:, 1]) * config.ttc_horizon))
        for k in cand:
            ego_poly = shapely.polygons(obb_corners_many(samples[k:k + 1], length, width))[0]
            agent_poly = shapely.polygons(
                obb_corners_many(track[k:k + 1], agent.box.length, agent.box.width))[0]
            hit = earliest_contact_dense(ego_poly, rel[k], agent_poly, config.ttc_horizon, dt)
            if hit is not None and hit <= config.ttc_threshold:
                return 0.0
    return 1.0


def lk_bruteforce(scene: Scene, traj: Trajectory, config) -> float:
    """Lane-keeping via shapely centerline distances and groupby run lengths."""
    scene = scene.in_ego_frame()
    samples = sample_trajectory(traj, config.sim_step)
    lines = [LineString(scene.map.lane_by_id(r).centerline)
             for r in scene.map.route_lane_ids if scene.map.lane_by_id(r)]
    offsets = [min(line.distance(Point(p[:2])) for line in lines) for p in samples]
    exceed = [o > config.lk_offset_threshold for o in offsets]
    longest = max((sum(1 for _ in g) for v, g in itertools.groupby(exceed) if v), default=0)
    return 0.0 if longest * config.sim_step > config.lk_duration_threshold + 1e-12 else 1.0


def route_linestring(scene: Scene) -> LineString:
    scene = scene.in_ego_frame()
    pts: list[tuple[float, float]] = []
    for rid in scene.map.route_lane_ids:
        lane = scene.map.lane_by_id(rid)
        if lane is None:
            continue
        for p in lane.centerline:
            if not pts or pts[-1] != tuple(p):
                pts.append(tuple(p))
    return LineString(pts)


def ep_bruteforce(scene: Scene, traj: Trajectory, d_ref: float, config):
    """Ego progress via shapely arc-length projection."""
    if d_ref < config.ep_min_ref:
        return None
    line = route_linestring(scene)
    samples = sample_trajectory(traj, config.sim_step)
    s0 = line.project(Point(samples[0, :2]))
    s1 = line.project(Point(samples[-1, :2]))
    return min(1.0, max(0.0, (s1 - s0) / d_ref))


# --- exact aggregate --------------------------------------------------------


def epdms_exact(sub: dict, weights: dict) -> Fraction:
    """EPDMS in exact rational arithmetic from a name->value dict (None = absent)."""
    penalty = Fraction(1)
    for m in ("nc", "dac", "ddc", "tlc"):
        penalty *= Fraction(sub[m])
    num, den = Fraction(0), Fraction(0)
    for m in ("ttc", "ep", "lk", "hc", "ec"):
        if sub[m] is None:
            continue
        w = Fraction(weights.get(m, 0))
        num += w * Fraction(sub[m])
        den += w
    if den == 0:
        raise ZeroDivisionError("all averaged metrics absent")
    return penalty * num / den


# --- exhaustive mining filter ----------------------------------------------


PERFECTION_EPS = 0.999


def _perfect_except(sub, skip: set) -> bool:
    for m in ("nc", "dac", "ddc", "tlc", "ttc", "ep", "lk", "hc", "ec"):
        if m in skip:
            continue
        v = getattr(sub, m)
        if v is None or v < PERFECTION_EPS:
            return False
    return True


def mine_bruteforce(human_sub, vocab_subs, thresholds, max_pairs_per_scene: int = 1):
    """All qualifying (case, vocab_index) pairs under the mining predicates,
    capped per case by nearest-EP-boundary tie-breaking (lowest index wins ties)."""
    results: dict[str, list[int]] = {"case1": [], "case1_mirror": [], "case2": []}
    h = human_sub
    if h.ep is None or h.lk is None:
        return []
    for i, v in enumerate(vocab_subs):
        if v is None or v.ep is None or v.lk is None:
            continue
        skip_lk_ep = {"lk", "ep"}
        if _perfect_except(h, skip_lk_ep) and _perfect_except(v, skip_lk_ep):
            if h.lk == 0 and h.ep >= thresholds.tau_ep1 and v.lk == 1 and v.ep <= h.ep - thresholds.delta_ep:
                results["case1"].append(i)
            if h.lk == 1 and h.ep <= thresholds.tau_ep2 and v.lk == 0 and v.ep >= h.ep + thresholds.delta_ep:
                results["case1_mirror"].append(i)
        if _perfect_except(h, {"ep"}) and _perfect_except(v, {"ep"}):
            if h.ep <= thresholds.tau_ep2 and v.ep >= h.ep + thresholds.delta_ep:
                results["case2"].append(i)
    out = []
    for case, idxs in results.items():
        if not idxs:
            continue
        if case == "case1":
            boundary = h.ep - thresholds.delta_ep
        else:
            boundary = h.ep + thresholds.delta_ep
        idxs.sort(key=lambda i: (abs(vocab_subs[i].ep - boundary), i))
        out.extend((case, i) for i in idxs[:max_pairs_per_scene])
    return sorted(out)


# --- numeric differentiation -------------------------------------------------


def finite_diff_grad(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    g = np.zeros_like(x, dtype=float)
    for i in range(x.size):
        e = np.zeros_like(x, dtype=float)
        e.flat[i] = h
        g.flat[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g
