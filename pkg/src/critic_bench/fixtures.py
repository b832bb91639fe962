"""Synthetic scene corpus generation.

Four archetypes cycle so any corpus of >= 3 scenes exercises every mining
case: a lane-nudge bypass (Case 1), a slow-down-vs-swerve layout (the
Case-1 mirror), a conservative slow approach (Case 2), and a clean free
road that must mine nothing. Scene content is built in the ego frame with
verified margins, then embedded at a random map pose so consumers must
transform through ego_pose_map.
"""

from __future__ import annotations

import math

import numpy as np

from . import geometry as geo
from .scenes import (
    Agent,
    EgoStatus,
    Lane,
    MapLayers,
    OrientedBox,
    Pose2D,
    Scene,
    Trajectory,
    validate_scene,
)

EGO_DIMS = (4.6, 1.9)
KNOT_TIMES = tuple(0.5 * (k + 1) for k in range(8))

ARCHETYPES = ("case1_bypass", "case1_mirror", "case2_slow", "clean_free")


def _traj(fn) -> Trajectory:
    return Trajectory(waypoints=tuple((t, Pose2D(*fn(t))) for t in KNOT_TIMES))


def straight_trajectory(speed: float) -> Trajectory:
    return _traj(lambda t: (speed * t, 0.0, 0.0))


def decel_trajectory(v0: float, a: float) -> Trajectory:
    def x_at(t):
        if a < 0 and v0 + a * t < 0:
            t_stop = v0 / -a
            return v0 * t_stop + 0.5 * a * t_stop * t_stop
        return v0 * t + 0.5 * a * t * t

    return _traj(lambda t: (x_at(t), 0.0, 0.0))


def nudge_trajectory(speed: float, offset: float) -> Trajectory:
    """In-lane speed with a sustained lateral excursion (> 2 s beyond 0.5 m
    when |offset| > 0.5); jerk stays under the comfort bound at 10 m/s."""
    ys = [offset] * 6 + [0.0, 0.0]
    return Trajectory(waypoints=tuple(
        (t, Pose2D(speed * t, ys[k], 0.0)) for k, t in enumerate(KNOT_TIMES)))


def _rect(x0, y0, x1, y1):
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


def _base_scene(scene_id, ego_speed, agents, drivable, human, crosswalks=()) -> Scene:
    lane = Lane(id="L0", centerline=((-15.0, 0.0), (70.0, 0.0)), width=3.5)
    return Scene(
        scene_id=scene_id,
        ego=EgoStatus(velocity=ego_speed, acceleration=0.0, driving_command="straight"),
        ego_box_dims=EGO_DIMS,
        agents=tuple(agents),
        map=MapLayers(
            drivable_area=(drivable,),
            lanes=(lane,),
            crosswalks=tuple(crosswalks),
            route_lane_ids=("L0",),
            traffic_lights=(),
        ),
        human_trajectory=human,
    )


def _vehicle(agent_id, x, y, heading=0.0, vx=0.0, vy=0.0, length=4.5, width=2.0,
             category="vehicle") -> Agent:
    return Agent(id=agent_id, box=OrientedBox(Pose2D(x, y, heading), length, width),
                 velocity=(vx, vy), category=category)


def _case1_bypass(scene_id: str, rng: np.random.Generator) -> Scene:
    # parked vehicle near the lane edge; the human shies 0.6 m away from it.
    # Lateral offset > 1 m keeps it out of the progress-reference cap, and
    # > 2.2 m keeps straight vocabulary candidates collision-free.
    obs_x = rng.uniform(24.0, 32.0)
    obs_y = rng.uniform(2.2, 3.0)
    agents = [_vehicle("parked", obs_x, obs_y)]
    if rng.random() < 0.5:
        agents.append(_vehicle("far", rng.uniform(76.0, 90.0), rng.uniform(-3.0, 3.0),
                               vx=rng.uniform(0.0, 2.0)))
    return _base_scene(scene_id, 10.0, agents, _rect(-15.0, -8.0, 70.0, 8.0),
                       nudge_trajectory(10.0, -0.6))


def _case1_mirror(scene_id: str, rng: np.random.Generator) -> Scene:
    # stalled vehicle well down the route; the human brakes early while
    # vocabulary arcs that swerve out of lane keep most of the progress.
    obs_x = rng.uniform(56.0, 62.0)
    agents = [_vehicle("stalled", obs_x, 0.0)]
    return _base_scene(scene_id, 10.0, agents, _rect(-15.0, -18.0, 70.0, 8.0),
                       decel_trajectory(10.0, -2.2))


def _case2_slow(scene_id: str, rng: np.random.Generator) -> Scene:
    # conservative human: gentle unforced slowdown; EP ~0.65 with a free road.
    agents = []
    if rng.random() < 0.6:
        agents.append(Agent(
            id="ped",
            box=OrientedBox(Pose2D(rng.uniform(28.0, 34.0), -6.0, math.pi / 2), 0.8, 0.8),
            velocity=(0.0, rng.uniform(0.5, 1.0)),
            category="pedestrian",
        ))
    crosswalks = (_rect(28.0, -8.0, 34.0, 8.0),) if agents else ()
    return _base_scene(scene_id, 10.0, agents, _rect(-15.0, -8.0, 70.0, 8.0),
                       decel_trajectory(10.0, -1.75), crosswalks=crosswalks)


def _clean_free(scene_id: str, rng: np.random.Generator) -> Scene:
    # perfect human on a free road; mines nothing.
    agents = []
    if rng.random() < 0.5:
        agents.append(_vehicle("lead", rng.uniform(48.0, 54.0), 0.0, vx=10.0))
    return _base_scene(scene_id, 10.0, agents, _rect(-15.0, -8.0, 70.0, 8.0),
                       straight_trajectory(10.0))


_BUILDERS = {
    "case1_bypass": _case1_bypass,
    "case1_mirror": _case1_mirror,
    "case2_slow": _case2_slow,
    "clean_free": _clean_free,
}


def embed_in_map_frame(scene: Scene, pose: Pose2D) -> Scene:
    """Express an ego-frame scene at the given map pose (inverse of in_ego_frame)."""
    rot = geo.rotation_matrix(pose.heading)
    t = np.array([pose.x, pose.y])

    def to_map_points(pts):
        arr = np.asarray(pts, dtype=float) @ rot.T + t
        return tuple((float(x), float(y)) for x, y in arr)

    def to_map_pose(p: Pose2D) -> Pose2D:
        (x, y), = np.asarray([[p.x, p.y]]) @ rot.T + t
        return Pose2D(float(x), float(y), geo.normalize_angle(p.heading + pose.heading))

    agents = tuple(
        Agent(
            id=a.id,
            box=OrientedBox(to_map_pose(a.box.center), a.box.length, a.box.width),
            velocity=tuple(float(v) for v in rot @ np.asarray(a.velocity)),
            category=a.category,
        )
        for a in scene.agents
    )
    layers = MapLayers(
        drivable_area=tuple(to_map_points(poly) for poly in scene.map.drivable_area),
        lanes=tuple(Lane(id=l.id, centerline=to_map_points(l.centerline), width=l.width)
                    for l in scene.map.lanes),
        crosswalks=tuple(to_map_points(poly) for poly in scene.map.crosswalks),
        route_lane_ids=scene.map.route_lane_ids,
        traffic_lights=scene.map.traffic_lights,
    )
    return Scene(
        scene_id=scene.scene_id,
        ego=scene.ego,
        ego_box_dims=scene.ego_box_dims,
        agents=agents,
        map=layers,
        human_trajectory=scene.human_trajectory,
        camera_refs=scene.camera_refs,
        ego_pose_map=pose,
    )


def gen_fixtures(seed: int, n: int) -> list[Scene]:
    """Deterministic corpus of n valid scenes cycling the four archetypes."""
    rng = np.random.default_rng(seed)
    scenes = []
    for k in range(n):
        archetype = ARCHETYPES[k % len(ARCHETYPES)]
        scene = _BUILDERS[archetype](f"fx{k:04d}-{archetype}", rng)
        pose = Pose2D(float(rng.uniform(-200.0, 200.0)), float(rng.uniform(-200.0, 200.0)),
                      float(rng.uniform(-math.pi, math.pi)))
        scene = embed_in_map_frame(scene, pose)
        problems = validate_scene(scene)
        if problems:
            raise AssertionError(f"generated invalid scene {scene.scene_id}: {problems}")
        scenes.append(scene)
    return scenes
