"""Rule-based scoring of a (scene, trajectory) pair.

Nine sub-scores are computed on a fixed simulation grid and combined into
an aggregate: four safety penalties multiply, five quality sub-scores enter
a weighted average. A sub-score of None means the metric was discarded for
this scenario and is excluded from the average.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import yaml

from . import geometry as geo
from .scenes import TRAJ_HORIZON, Lane, Scene, SubScores, Trajectory, sample_trajectory

DDC_COUNTER_LIMIT = 2.0  # meters of accumulated counter-direction motion tolerated at half credit

DEFAULT_WEIGHTS = {"ttc": 5.0, "ep": 5.0, "lk": 2.0, "hc": 2.0, "ec": 2.0}


class ConfigurationError(Exception):
    """The scene or config cannot support the requested metric."""


class UndefinedScoreError(Exception):
    """Every averaged sub-score was discarded; the aggregate is undefined."""


@dataclass(frozen=True)
class MetricConfig:
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    lk_offset_threshold: float = 0.5
    lk_duration_threshold: float = 2.0
    ep_min_ref: float = 5.0
    ttc_horizon: float = 1.0
    ttc_threshold: float = 1.0
    max_abs_accel: float = 6.0
    max_abs_jerk: float = 10.0
    max_abs_yaw_rate: float = 0.95
    sim_step: float = 0.1
    # progress-reference surrogate
    target_speed: float = 10.0
    ref_accel: float = 2.0
    safety_gap: float = 4.0
    blocking_lateral_threshold: float = 1.0
    # replan-consistency check
    ec_max_accel_delta: float = 2.0

    def __post_init__(self):
        for name in ("lk_offset_threshold", "lk_duration_threshold", "ep_min_ref",
                     "ttc_horizon", "ttc_threshold", "max_abs_accel", "max_abs_jerk",
                     "max_abs_yaw_rate", "sim_step"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"MetricConfig.{name} must be > 0")
        if any(w < 0 for w in self.weights.values()):
            raise ConfigurationError("MetricConfig.weights must be nonnegative")
        if sum(self.weights.values()) <= 0:
            raise ConfigurationError("MetricConfig.weights must sum to > 0")


METRIC_CONFIG_KEYS = (
    "weights", "lk_offset_threshold", "lk_duration_threshold", "ep_min_ref",
    "ttc_horizon", "ttc_threshold", "max_abs_accel", "max_abs_jerk",
    "max_abs_yaw_rate", "sim_step", "target_speed", "ref_accel", "safety_gap",
    "blocking_lateral_threshold", "ec_max_accel_delta",
)


def load_metric_config(path) -> MetricConfig:
    """Read a MetricConfig from a flat key-value (YAML) file."""
    with open(path) as f:
        raw = yaml.safe_load(f) or {}
    unknown = set(raw) - set(METRIC_CONFIG_KEYS)
    if unknown:
        raise ConfigurationError(f"unknown metric config keys: {sorted(unknown)}")
    if "weights" in raw:
        raw["weights"] = {str(k): float(v) for k, v in raw["weights"].items()}
    return MetricConfig(**raw)


@dataclass(frozen=True)
class ProgressReference:
    """Context-blind upper bound on 4 s route progress, in meters."""

    d_ref: float

    def __post_init__(self):
        if self.d_ref < 0:
            raise ValueError("d_ref must be >= 0")


class ScoringContext:
    """Per-scene precomputation shared across many trajectory scorings."""

    def __init__(self, scene: Scene, config: MetricConfig):
        self.config = config
        self.scene = scene.in_ego_frame()
        self.route_lanes: list[Lane] = []
        for rid in self.scene.map.route_lane_ids:
            lane = self.scene.map.lane_by_id(rid)
            if lane is not None:
                self.route_lanes.append(lane)
        self.route_polyline, self.lane_end_s = self._build_route()
        self.drivable = [np.asarray(p, dtype=float) for p in self.scene.map.drivable_area]
        self.ego_length, self.ego_width = self.scene.ego_box_dims
        self._ref: Optional[ProgressReference] = None

    def _build_route(self):
        pts: list[tuple[float, float]] = []
        lane_end_s: dict[str, float] = {}
        for lane in self.route_lanes:
            for p in lane.centerline:
                if not pts or (abs(pts[-1][0] - p[0]) > 1e-9 or abs(pts[-1][1] - p[1]) > 1e-9):
                    pts.append((float(p[0]), float(p[1])))
            if pts:
                line = np.asarray(pts, dtype=float)
                lane_end_s[lane.id] = float(geo.polyline_cumlen(line)[-1])
        if len(pts) < 2:
            return None, lane_end_s
        return np.asarray(pts, dtype=float), lane_end_s

    def require_route(self) -> np.ndarray:
        if self.route_polyline is None:
            raise ConfigurationError("scene has no usable route lanes")
        return self.route_polyline

    def sim_times(self) -> np.ndarray:
        n = int(round(TRAJ_HORIZON / self.config.sim_step))
        return np.arange(n + 1) * self.config.sim_step

    def samples(self, traj: Trajectory) -> np.ndarray:
        return sample_trajectory(traj, self.config.sim_step)

    def sample_velocities(self, samples: np.ndarray) -> np.ndarray:
        """Per-sample velocity vectors by forward difference (last repeats)."""
        dt = self.config.sim_step
        v = np.diff(samples[:, :2], axis=0) / dt
        return np.vstack([v, v[-1]])

    def progress_reference(self) -> ProgressReference:
        if self._ref is None:
            self._ref = compute_progress_reference_ctx(self)
        return self._ref

    def score(self, traj: Trajectory, prev_traj: Optional[Trajectory] = None) -> SubScores:
        samples = self.samples(traj)
        ref = self.progress_reference()
        nc = compute_nc_ctx(self, samples)
        dac = compute_dac_ctx(self, samples)
        ddc = compute_ddc_ctx(self, samples)
        tlc = compute_tlc_ctx(self, samples)
        ttc = compute_ttc_ctx(self, samples)
        ep = compute_ep_ctx(self, samples, ref)
        lk = compute_lk_ctx(self, samples)
        hc = compute_hc(self.scene, traj, self.config)
        ec = compute_ec(prev_traj, traj, self.config)
        partial = SubScores(nc=nc, dac=dac, ddc=ddc, tlc=tlc, ttc=ttc, ep=ep, lk=lk, hc=hc, ec=ec, epdms=0.0)
        return replace(partial, epdms=aggregate_epdms(partial, self.config))


# --- individual sub-metrics -------------------------------------------------


def compute_lk_ctx(ctx: ScoringContext, samples: np.ndarray) -> float:
    if not ctx.route_lanes:
        raise ConfigurationError("lane keeping requires a non-empty route")
    pts = samples[:, :2]
    offsets = np.full(len(pts), np.inf)
    for lane in ctx.route_lanes:
        line = np.asarray(lane.centerline, dtype=float)
        _, d = geo.project_onto_polyline(pts, line)
        offsets = np.minimum(offsets, d)
    exceed = offsets > ctx.config.lk_offset_threshold
    # duration of a run = number of consecutive exceeding samples * sim_step
    run, longest = 0, 0
    for flag in exceed:
        run = run + 1 if flag else 0
        longest = max(longest, run)
    violated = longest * ctx.config.sim_step > ctx.config.lk_duration_threshold + 1e-12
    return 0.0 if violated else 1.0


def compute_lk(scene: Scene, traj: Trajectory, config: MetricConfig) -> float:
    ctx = ScoringContext(scene, config)
    return compute_lk_ctx(ctx, ctx.samples(traj))


def compute_progress_reference_ctx(ctx: ScoringContext) -> ProgressReference:
    route = ctx.require_route()
    cfg = ctx.config
    horizon = TRAJ_HORIZON
    v0, vt, a = ctx.scene.ego.velocity, cfg.target_speed, cfg.ref_accel
    if abs(vt - v0) < 1e-12 or a <= 0:
        reach = v0 * horizon
    else:
        t_star = min(horizon, abs(vt - v0) / a)
        sign = 1.0 if vt > v0 else -1.0
        ramp = v0 * t_star + 0.5 * sign * a * t_star * t_star
        reach = max(0.0, ramp + vt * (horizon - t_star))

    s_ego, _ = geo.project_onto_polyline(np.array([[0.0, 0.0]]), route)
    s_ego = float(s_ego[0])
    cap = math.inf
    for agent in ctx.scene.agents:
        c = agent.box.center
        s_a, d_a = geo.project_onto_polyline(np.array([[c.x, c.y]]), route)
        if float(d_a[0]) <= cfg.blocking_lateral_threshold and float(s_a[0]) > s_ego:
            cap = min(cap, max(0.0, float(s_a[0]) - s_ego - cfg.safety_gap))
    return ProgressReference(d_ref=max(0.0, min(reach, cap)))


def compute_progress_reference(scene: Scene, config: MetricConfig) -> ProgressReference:
    return compute_progress_reference_ctx(ScoringContext(scene, config))


def compute_ep_ctx(ctx: ScoringContext, samples: np.ndarray, ref: ProgressReference) -> Optional[float]:
    if ref.d_ref < ctx.config.ep_min_ref:
        return None
    route = ctx.require_route()
    s, _ = geo.project_onto_polyline(samples[:, :2], route)
    d_ego = max(0.0, float(s[-1] - s[0]))
    return min(1.0, max(0.0, d_ego / ref.d_ref))


def compute_ep(scene: Scene, traj: Trajectory, ref: ProgressReference, config: MetricConfig) -> Optional[float]:
    ctx = ScoringContext(scene, config)
    return compute_ep_ctx(ctx, ctx.samples(traj), ref)


def _agent_poses_over_time(agent, times: np.ndarray) -> np.ndarray:
    c = agent.box.center
    poses = np.empty((len(times), 3))
    poses[:, 0] = c.x + agent.velocity[0] * times
    poses[:, 1] = c.y + agent.velocity[1] * times
    poses[:, 2] = c.heading
    return poses


def compute_nc_ctx(ctx: ScoringContext, samples: np.ndarray) -> float:
    if not ctx.scene.agents:
        return 1.0
    times = ctx.sim_times()
    ego_corners = geo.box_corners_many(samples, ctx.ego_length, ctx.ego_width)
    ego_vel = ctx.sample_velocities(samples)
    reach = 0.5 * math.hypot(ctx.ego_length, ctx.ego_width)
    for agent in ctx.scene.agents:
        poses = _agent_poses_over_time(agent, times)
        r = reach + 0.5 * math.hypot(agent.box.length, agent.box.width)
        close = np.hypot(poses[:, 0] - samples[:, 0], poses[:, 1] - samples[:, 1]) <= r
        if not close.any():
            continue
        overlap = geo.boxes_overlap_many(ego_corners[close], geo.box_corners_many(
            poses[close], agent.box.length, agent.box.width))
        if not overlap.any():
            continue
        idx = np.flatnonzero(close)[overlap]
        toward = poses[idx, :2] - samples[idx, :2]
        closing = np.einsum("ij,ij->i", ego_vel[idx], toward)
        if (closing > 1e-9).any():
            return 0.0
    return 1.0


def compute_nc(scene: Scene, traj: Trajectory, config: MetricConfig) -> float:
    ctx = ScoringContext(scene, config)
    return compute_nc_ctx(ctx, ctx.samples(traj))


def compute_dac_ctx(ctx: ScoringContext, samples: np.ndarray) -> float:
    if not ctx.drivable:
        return 0.0
    corners = geo.box_corners_many(samples, ctx.ego_length, ctx.ego_width).reshape(-1, 2)
    return 1.0 if geo.points_in_any_polygon(corners, ctx.drivable).all() else 0.0


def compute_dac(scene: Scene, traj: Trajectory, config: MetricConfig = MetricConfig()) -> float:
    ctx = ScoringContext(scene, config)
    return compute_dac_ctx(ctx, ctx.samples(traj))


def compute_ddc_ctx(ctx: ScoringContext, samples: np.ndarray) -> float:
    route = ctx.require_route()
    steps = np.diff(samples[:, :2], axis=0)
    ds = np.hypot(steps[:, 0], steps[:, 1])
    moving = ds > 1e-6
    if not moving.any():
        return 1.0
    mids = samples[:-1, :2] + 0.5 * steps
    s, _ = geo.project_onto_polyline(mids[moving], route)
    tangents = np.array([geo.polyline_tangent_at(route, float(si)) for si in s])
    along = np.einsum("ij,ij->i", steps[moving], tangents)
    counter_len = float(ds[moving][along < 0].sum())
    if counter_len <= 1e-9:
        return 1.0
    return 0.5 if counter_len < DDC_COUNTER_LIMIT else 0.0


def compute_ddc(scene: Scene, traj: Trajectory, config: MetricConfig = MetricConfig()) -> float:
    ctx = ScoringContext(scene, config)
    return compute_ddc_ctx(ctx, ctx.samples(traj))


def compute_tlc_ctx(ctx: ScoringContext, samples: np.ndarray) -> float:
    red_lanes = {tl.lane_id for tl in ctx.scene.map.traffic_lights if tl.state == "red"}
    if not red_lanes:
        return 1.0
    route = ctx.require_route()
    s, _ = geo.project_onto_polyline(samples[:, :2], route)
    s_start, s_max = float(s[0]), float(s.max())
    for lane_id, stop_s in ctx.lane_end_s.items():
        if lane_id in red_lanes and s_start < stop_s - 1e-9 and s_max > stop_s + 1e-9:
            return 0.0
    return 1.0


def compute_tlc(scene: Scene, traj: Trajectory, config: MetricConfig = MetricConfig()) -> float:
    ctx = ScoringContext(scene, config)
    return compute_tlc_ctx(ctx, ctx.samples(traj))


def compute_ttc_ctx(ctx: ScoringContext, samples: np.ndarray) -> float:
    if not ctx.scene.agents:
        return 1.0
    cfg = ctx.config
    times = ctx.sim_times()
    ego_corners = geo.box_corners_many(samples, ctx.ego_length, ctx.ego_width)
    ego_vel = ctx.sample_velocities(samples)
    ego_speed = np.hypot(ego_vel[:, 0], ego_vel[:, 1])
    ego_r = 0.5 * math.hypot(ctx.ego_length, ctx.ego_width)
    for agent in ctx.scene.agents:
        poses = _agent_poses_over_time(agent, times)
        agent_v = np.asarray(agent.velocity, dtype=float)
        rel_speed = np.hypot(ego_vel[:, 0] - agent_v[0], ego_vel[:, 1] - agent_v[1])
        r = ego_r + 0.5 * math.hypot(agent.box.length, agent.box.width)
        dist = np.hypot(poses[:, 0] - samples[:, 0], poses[:, 1] - samples[:, 1])
        candidates = np.flatnonzero((ego_speed > 1e-9) & (dist <= r + rel_speed * cfg.ttc_horizon))
        for k in candidates:
            agent_corners = geo.box_corners(poses[k, 0], poses[k, 1], poses[k, 2],
                                            agent.box.length, agent.box.width)
            hit = geo.cast_boxes(ego_corners[k], ego_vel[k], agent_corners, agent_v, cfg.ttc_horizon)
            if hit is not None and hit <= cfg.ttc_threshold:
                return 0.0
    return 1.0


def compute_ttc(scene: Scene, traj: Trajectory, config: MetricConfig) -> float:
    ctx = ScoringContext(scene, config)
    return compute_ttc_ctx(ctx, ctx.samples(traj))


def _knot_dynamics(scene: Scene, traj: Trajectory):
    """Velocity/acceleration/jerk/yaw-rate sequences at waypoint resolution.

    The ego's reported speed seeds the t=0 velocity so the first segment's
    acceleration reflects the transition out of the current state.
    """
    knots = traj.pose_array()
    dt = 0.5
    seg_v = np.diff(knots[:, :2], axis=0) / dt                       # (8, 2)
    v = np.vstack([[scene.ego.velocity, 0.0], seg_v])               # (9, 2)
    a = np.diff(v, axis=0) / dt                                      # (8, 2)
    j = np.diff(a, axis=0) / dt                                      # (7, 2)
    dh = np.array([geo.angle_diff(knots[i + 1, 2], knots[i, 2]) for i in range(len(knots) - 1)])
    yaw_rate = dh / dt
    return v, a, j, yaw_rate


def compute_hc(scene: Scene, traj: Trajectory, config: MetricConfig) -> float:
    _, a, j, yaw_rate = _knot_dynamics(scene, traj)
    if np.hypot(a[:, 0], a[:, 1]).max(initial=0.0) > config.max_abs_accel:
        return 0.0
    if np.hypot(j[:, 0], j[:, 1]).max(initial=0.0) > config.max_abs_jerk:
        return 0.0
    if np.abs(yaw_rate).max(initial=0.0) > config.max_abs_yaw_rate:
        return 0.0
    return 1.0


def compute_ec(prev_traj: Optional[Trajectory], traj: Trajectory, config: MetricConfig) -> float:
    """Consistency of dynamics across consecutive replan frames; vacuously 1
    without a prior frame."""
    if prev_traj is None:
        return 1.0
    dt = 0.5
    a_prev = np.diff(np.diff(prev_traj.pose_array()[:, :2], axis=0) / dt, axis=0) / dt
    a_cur = np.diff(np.diff(traj.pose_array()[:, :2], axis=0) / dt, axis=0) / dt
    delta = np.hypot(*(a_cur - a_prev).T).max(initial=0.0)
    return 1.0 if delta <= config.ec_max_accel_delta else 0.0


def aggregate_epdms(sub: SubScores, config: MetricConfig) -> float:
    """Multiplicative penalties times the weighted average of present
    quality sub-scores; absent metrics drop out of both sums."""
    penalty = 1.0
    for name, value in sub.penalties().items():
        if value is None:
            raise ConfigurationError(f"penalty metric {name} must be present")
        penalty *= value
    num = den = 0.0
    for name, value in sub.averaged().items():
        if value is None:
            continue
        w = config.weights.get(name, 0.0)
        num += w * value
        den += w
    if den == 0.0:
        raise UndefinedScoreError("all averaged sub-scores are absent")
    return penalty * (num / den)


def score_trajectory(scene: Scene, traj: Trajectory, config: MetricConfig,
                     prev_traj: Optional[Trajectory] = None) -> SubScores:
    """Run every sub-metric and the aggregate; deterministic for fixed inputs."""
    return ScoringContext(scene, config).score(traj, prev_traj=prev_traj)
