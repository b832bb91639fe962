"""Domain types for symbolic scenes, trajectories, and sub-scores.

All types are immutable value objects; operations are pure. Trajectory
poses live in the ego frame at t=0 (+x forward); agents and map layers
live in the map frame and scenes carry the ego's map-frame pose so the
two can be compared.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import SCENE_SCHEMA
from . import geometry as geo

TRAJ_POINTS = 8
TRAJ_SPACING = 0.5
TRAJ_HORIZON = 4.0

AGENT_CATEGORIES = ("vehicle", "pedestrian", "cyclist", "static_object")
DRIVING_COMMANDS = ("left", "straight", "right", "unknown")
LIGHT_STATES = ("red", "green", "unknown")


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    heading: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.heading])


ORIGIN_POSE = Pose2D(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class Trajectory:
    """8 timestamped poses over a 4 s horizon; the pose at t=0 is the ego
    origin and is not stored."""

    waypoints: tuple[tuple[float, Pose2D], ...]
    horizon: float = TRAJ_HORIZON

    def pose_array(self) -> np.ndarray:
        """Knot poses including the implicit origin, shape (9, 3)."""
        rows = [(0.0, 0.0, 0.0)]
        rows += [(p.x, p.y, p.heading) for _, p in self.waypoints]
        return np.array(rows)

    def times(self) -> np.ndarray:
        return np.concatenate([[0.0], [t for t, _ in self.waypoints]])


@dataclass(frozen=True)
class OrientedBox:
    center: Pose2D
    length: float
    width: float

    def __post_init__(self):
        if self.length <= 0 or self.width <= 0:
            raise ValueError(f"OrientedBox dimensions must be positive, got {self.length}x{self.width}")

    def corners(self) -> np.ndarray:
        return geo.box_corners(self.center.x, self.center.y, self.center.heading, self.length, self.width)


@dataclass(frozen=True)
class Agent:
    id: str
    box: OrientedBox
    velocity: tuple[float, float]
    category: str


@dataclass(frozen=True)
class Lane:
    id: str
    centerline: tuple[tuple[float, float], ...]
    width: float


@dataclass(frozen=True)
class TrafficLight:
    lane_id: str
    state: str


@dataclass(frozen=True)
class MapLayers:
    drivable_area: tuple[tuple[tuple[float, float], ...], ...]
    lanes: tuple[Lane, ...]
    crosswalks: tuple[tuple[tuple[float, float], ...], ...] = ()
    route_lane_ids: tuple[str, ...] = ()
    traffic_lights: tuple[TrafficLight, ...] = ()

    def lane_by_id(self, lane_id: str) -> Optional[Lane]:
        for lane in self.lanes:
            if lane.id == lane_id:
                return lane
        return None


@dataclass(frozen=True)
class EgoStatus:
    velocity: float
    acceleration: float
    driving_command: str


@dataclass(frozen=True)
class Scene:
    scene_id: str
    ego: EgoStatus
    ego_box_dims: tuple[float, float]
    agents: tuple[Agent, ...]
    map: MapLayers
    human_trajectory: Trajectory
    camera_refs: Optional[tuple[str, str, str]] = None
    # Ego pose in the map frame at t=0; its inverse maps map-frame
    # geometry into the ego frame the trajectories use.
    ego_pose_map: Pose2D = field(default=ORIGIN_POSE)

    def in_ego_frame(self) -> "Scene":
        """Scene with agents and map expressed in the ego frame (identity transform)."""
        p = self.ego_pose_map
        if p == ORIGIN_POSE:
            return self

        def xf_points(pts):
            arr = geo.transform_to_frame(np.asarray(pts, dtype=float), p.x, p.y, p.heading)
            return tuple((float(x), float(y)) for x, y in arr)

        def xf_pose(pose: Pose2D) -> Pose2D:
            (x, y), = geo.transform_to_frame(np.array([[pose.x, pose.y]]), p.x, p.y, p.heading)
            return Pose2D(float(x), float(y), geo.normalize_angle(pose.heading - p.heading))

        rot = geo.rotation_matrix(p.heading)
        agents = tuple(
            replace(
                a,
                box=OrientedBox(xf_pose(a.box.center), a.box.length, a.box.width),
                velocity=tuple(float(v) for v in (np.asarray(a.velocity) @ rot)),
            )
            for a in self.agents
        )
        layers = MapLayers(
            drivable_area=tuple(xf_points(poly) for poly in self.map.drivable_area),
            lanes=tuple(replace(l, centerline=xf_points(l.centerline)) for l in self.map.lanes),
            crosswalks=tuple(xf_points(poly) for poly in self.map.crosswalks),
            route_lane_ids=self.map.route_lane_ids,
            traffic_lights=self.map.traffic_lights,
        )
        return replace(self, agents=agents, map=layers, ego_pose_map=ORIGIN_POSE)


@dataclass(frozen=True)
class SubScores:
    """The nine rule sub-scores plus the aggregate.

    nc/dac/ddc/tlc multiply into the aggregate as penalties; ttc/ep/lk/hc/ec
    enter a weighted average. None encodes a discarded (absent) metric.
    """

    nc: float
    dac: float
    ddc: float
    tlc: float
    ttc: Optional[float]
    ep: Optional[float]
    lk: Optional[float]
    hc: Optional[float]
    ec: Optional[float]
    epdms: float

    PENALTY_NAMES = ("nc", "dac", "ddc", "tlc")
    AVERAGED_NAMES = ("ttc", "ep", "lk", "hc", "ec")

    def penalties(self) -> dict[str, float]:
        return {m: getattr(self, m) for m in self.PENALTY_NAMES}

    def averaged(self) -> dict[str, Optional[float]]:
        return {m: getattr(self, m) for m in self.AVERAGED_NAMES}


# --- validation -----------------------------------------------------------


def _finite(*values) -> bool:
    return all(isinstance(v, (int, float)) and math.isfinite(v) for v in values)


def _validate_pose(pose: Pose2D, where: str, out: list[str]):
    if not _finite(pose.x, pose.y, pose.heading):
        out.append(f"{where}: coordinates must be finite")
        return
    if not (-math.pi < pose.heading <= math.pi):
        out.append(f"{where}.heading: expected value in (-pi, pi], got {pose.heading}")


def validate_trajectory(traj: Trajectory, where: str = "Trajectory") -> list[str]:
    out: list[str] = []
    if len(traj.waypoints) != TRAJ_POINTS:
        out.append(f"{where}.waypoints: expected {TRAJ_POINTS}, got {len(traj.waypoints)}")
        return out
    if traj.horizon != TRAJ_HORIZON:
        out.append(f"{where}.horizon: expected {TRAJ_HORIZON}, got {traj.horizon}")
    prev_t = 0.0
    for i, (t, pose) in enumerate(traj.waypoints):
        if abs(t - (i + 1) * TRAJ_SPACING) > 1e-9:
            out.append(f"{where}.waypoints[{i}].t: expected {(i + 1) * TRAJ_SPACING}, got {t}")
        if t <= prev_t:
            out.append(f"{where}.waypoints[{i}].t: not strictly increasing")
        prev_t = t
        _validate_pose(pose, f"{where}.waypoints[{i}].pose", out)
    return out


def validate_scene(scene: Scene) -> list[str]:
    """Collect invariant violations; empty list means the scene is well-formed."""
    out: list[str] = []
    if not scene.scene_id:
        out.append("Scene.scene_id: must be non-empty")

    if scene.ego.velocity < 0:
        out.append(f"EgoStatus.velocity: expected >= 0, got {scene.ego.velocity}")
    if scene.ego.driving_command not in DRIVING_COMMANDS:
        out.append(f"EgoStatus.driving_command: unknown value {scene.ego.driving_command!r}")
    if not _finite(scene.ego.velocity, scene.ego.acceleration):
        out.append("EgoStatus: velocity and acceleration must be finite")

    length, width = scene.ego_box_dims
    if length <= 0 or width <= 0:
        out.append(f"Scene.ego_box_dims: expected positive dims, got {scene.ego_box_dims}")
    _validate_pose(scene.ego_pose_map, "Scene.ego_pose_map", out)

    seen: set[str] = set()
    for agent in scene.agents:
        if agent.id in seen:
            out.append(f"Agent.id: duplicate id {agent.id!r}")
        seen.add(agent.id)
        if agent.category not in AGENT_CATEGORIES:
            out.append(f"Agent[{agent.id}].category: unknown value {agent.category!r}")
        if not _finite(*agent.velocity):
            out.append(f"Agent[{agent.id}].velocity: must be finite")
        _validate_pose(agent.box.center, f"Agent[{agent.id}].box.center", out)

    for k, poly in enumerate(scene.map.drivable_area):
        if len(poly) < 3 or not geo.polygon_is_simple(np.asarray(poly)):
            out.append(f"MapLayers.drivable_area[{k}]: polygon must be simple with >= 3 vertices")
    for k, poly in enumerate(scene.map.crosswalks):
        if len(poly) < 3 or not geo.polygon_is_simple(np.asarray(poly)):
            out.append(f"MapLayers.crosswalks[{k}]: polygon must be simple with >= 3 vertices")

    lane_ids = set()
    for lane in scene.map.lanes:
        if lane.id in lane_ids:
            out.append(f"Lane.id: duplicate id {lane.id!r}")
        lane_ids.add(lane.id)
        if len(lane.centerline) < 2:
            out.append(f"Lane[{lane.id}].centerline: expected >= 2 points, got {len(lane.centerline)}")
        if lane.width <= 0:
            out.append(f"Lane[{lane.id}].width: expected > 0, got {lane.width}")
    for rid in scene.map.route_lane_ids:
        if rid not in lane_ids:
            out.append(f"MapLayers.route_lane_ids: unknown lane id {rid!r}")
    for tl in scene.map.traffic_lights:
        if tl.lane_id not in lane_ids:
            out.append(f"TrafficLight.lane_id: unknown lane id {tl.lane_id!r}")
        if tl.state not in LIGHT_STATES:
            out.append(f"TrafficLight.state: unknown value {tl.state!r}")

    if scene.camera_refs is not None and len(scene.camera_refs) != 3:
        out.append(f"Scene.camera_refs: expected 3 references, got {len(scene.camera_refs)}")

    out.extend(validate_trajectory(scene.human_trajectory, "Scene.human_trajectory"))
    return out


# --- trajectory operations ------------------------------------------------


def interpolate_pose(traj: Trajectory, t: float) -> Pose2D:
    """Pose at time t: linear in x/y, shortest arc in heading; t=0 is the origin."""
    if t < 0.0 or t > traj.horizon + 1e-12:
        raise ValueError(f"t={t} outside [0, {traj.horizon}]")
    knots = traj.pose_array()
    times = traj.times()
    i = int(np.searchsorted(times, t, side="right")) - 1
    if i >= len(times) - 1:
        x, y, h = knots[-1]
        return Pose2D(float(x), float(y), float(h))
    u = (t - times[i]) / (times[i + 1] - times[i])
    x = knots[i, 0] + u * (knots[i + 1, 0] - knots[i, 0])
    y = knots[i, 1] + u * (knots[i + 1, 1] - knots[i, 1])
    h = geo.interp_angle(knots[i, 2], knots[i + 1, 2], u)
    return Pose2D(float(x), float(y), float(h))


def sample_trajectory(traj: Trajectory, dt: float) -> np.ndarray:
    """Poses sampled at multiples of dt over [0, horizon], shape (T, 3)."""
    n = int(round(traj.horizon / dt))
    ts = np.arange(n + 1) * dt
    knots = traj.pose_array()
    times = traj.times()
    x = np.interp(ts, times, knots[:, 0])
    y = np.interp(ts, times, knots[:, 1])
    # headings are unwrapped before interpolation so each knot-to-knot step
    # follows the shortest arc
    unwrapped = np.concatenate([[knots[0, 2]], knots[0, 2] + np.cumsum(
        [geo.angle_diff(knots[i + 1, 2], knots[i, 2]) for i in range(len(knots) - 1)]
    )])
    h = np.interp(ts, times, unwrapped)
    h = np.vectorize(geo.normalize_angle)(h)
    return np.stack([x, y, h], axis=1)


def lateral_offset(pose: Pose2D, lane: Lane) -> float:
    """Unsigned perpendicular distance from the pose position to the lane centerline."""
    line = np.asarray(lane.centerline, dtype=float)
    if len(line) < 2:
        raise ValueError(f"Lane {lane.id!r} centerline is degenerate")
    return geo.point_to_polyline_distance((pose.x, pose.y), line)


# --- JSON serialization -----------------------------------------------------


def _pose_to_json(p: Pose2D) -> dict:
    return {"x": p.x, "y": p.y, "heading": p.heading}


def _pose_from_json(d: dict) -> Pose2D:
    return Pose2D(float(d["x"]), float(d["y"]), float(d["heading"]))


def trajectory_to_json(traj: Trajectory) -> dict:
    return {
        "waypoints": [{"t": t, "pose": _pose_to_json(p)} for t, p in traj.waypoints],
        "horizon": traj.horizon,
    }


def trajectory_from_json(d: dict) -> Trajectory:
    return Trajectory(
        waypoints=tuple((float(w["t"]), _pose_from_json(w["pose"])) for w in d["waypoints"]),
        horizon=float(d.get("horizon", TRAJ_HORIZON)),
    )


def scene_to_json(scene: Scene) -> dict:
    return {
        "schema": SCENE_SCHEMA,
        "scene_id": scene.scene_id,
        "ego": {
            "velocity": scene.ego.velocity,
            "acceleration": scene.ego.acceleration,
            "driving_command": scene.ego.driving_command,
        },
        "ego_box_dims": list(scene.ego_box_dims),
        "ego_pose_map": _pose_to_json(scene.ego_pose_map),
        "agents": [
            {
                "id": a.id,
                "box": {
                    "center": _pose_to_json(a.box.center),
                    "length": a.box.length,
                    "width": a.box.width,
                },
                "velocity": list(a.velocity),
                "category": a.category,
            }
            for a in scene.agents
        ],
        "map": {
            "drivable_area": [[list(p) for p in poly] for poly in scene.map.drivable_area],
            "lanes": [
                {"id": l.id, "centerline": [list(p) for p in l.centerline], "width": l.width}
                for l in scene.map.lanes
            ],
            "crosswalks": [[list(p) for p in poly] for poly in scene.map.crosswalks],
            "route_lane_ids": list(scene.map.route_lane_ids),
            "traffic_lights": [{"lane_id": t.lane_id, "state": t.state} for t in scene.map.traffic_lights],
        },
        "human_trajectory": trajectory_to_json(scene.human_trajectory),
        "camera_refs": list(scene.camera_refs) if scene.camera_refs else None,
    }


def scene_from_json(d: dict) -> Scene:
    if d.get("schema") != SCENE_SCHEMA:
        raise ValueError(f"expected schema {SCENE_SCHEMA!r}, got {d.get('schema')!r}")
    m = d["map"]
    return Scene(
        scene_id=str(d["scene_id"]),
        ego=EgoStatus(
            velocity=float(d["ego"]["velocity"]),
            acceleration=float(d["ego"]["acceleration"]),
            driving_command=str(d["ego"]["driving_command"]),
        ),
        ego_box_dims=(float(d["ego_box_dims"][0]), float(d["ego_box_dims"][1])),
        ego_pose_map=_pose_from_json(d.get("ego_pose_map", {"x": 0.0, "y": 0.0, "heading": 0.0})),
        agents=tuple(
            Agent(
                id=str(a["id"]),
                box=OrientedBox(
                    center=_pose_from_json(a["box"]["center"]),
                    length=float(a["box"]["length"]),
                    width=float(a["box"]["width"]),
                ),
                velocity=(float(a["velocity"][0]), float(a["velocity"][1])),
                category=str(a["category"]),
            )
            for a in d.get("agents", [])
        ),
        map=MapLayers(
            drivable_area=tuple(tuple((float(x), float(y)) for x, y in poly) for poly in m["drivable_area"]),
            lanes=tuple(
                Lane(
                    id=str(l["id"]),
                    centerline=tuple((float(x), float(y)) for x, y in l["centerline"]),
                    width=float(l["width"]),
                )
                for l in m["lanes"]
            ),
            crosswalks=tuple(tuple((float(x), float(y)) for x, y in poly) for poly in m.get("crosswalks", [])),
            route_lane_ids=tuple(str(r) for r in m.get("route_lane_ids", [])),
            traffic_lights=tuple(
                TrafficLight(lane_id=str(t["lane_id"]), state=str(t["state"]))
                for t in m.get("traffic_lights", [])
            ),
        ),
        human_trajectory=trajectory_from_json(d["human_trajectory"]),
        camera_refs=tuple(d["camera_refs"]) if d.get("camera_refs") else None,
    )


def write_scenes(path, scenes) -> None:
    with open(path, "w") as f:
        for scene in scenes:
            f.write(json.dumps(scene_to_json(scene), sort_keys=True) + "\n")


def read_scenes(path) -> list[Scene]:
    scenes = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                scenes.append(scene_from_json(json.loads(line)))
    return scenes


def subscores_to_json(s: SubScores) -> dict:
    return {
        "nc": s.nc, "dac": s.dac, "ddc": s.ddc, "tlc": s.tlc,
        "ttc": s.ttc, "ep": s.ep, "lk": s.lk, "hc": s.hc, "ec": s.ec,
        "epdms": s.epdms,
    }


def subscores_from_json(d: dict) -> SubScores:
    def opt(v):
        return None if v is None else float(v)

    return SubScores(
        nc=float(d["nc"]), dac=float(d["dac"]), ddc=float(d["ddc"]), tlc=float(d["tlc"]),
        ttc=opt(d["ttc"]), ep=opt(d["ep"]), lk=opt(d["lk"]), hc=opt(d["hc"]), ec=opt(d["ec"]),
        epdms=float(d["epdms"]),
    )
