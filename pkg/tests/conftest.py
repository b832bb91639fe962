"""Shared builders for synthetic scenes and trajectories."""

from __future__ import annotations

import math

import numpy as np
import pytest

from critic_bench.scenes import (
    Agent,
    EgoStatus,
    Lane,
    MapLayers,
    OrientedBox,
    Pose2D,
    Scene,
    TrafficLight,
    Trajectory,
)

EGO_DIMS = (4.6, 1.9)
KNOT_TIMES = tuple(0.5 * (k + 1) for k in range(8))


def traj_from_fn(fn) -> Trajectory:
    """Trajectory with waypoints fn(t) -> (x, y, heading) at the 8 knot times."""
    return Trajectory(waypoints=tuple((t, Pose2D(*fn(t))) for t in KNOT_TIMES))


def straight_traj(speed: float, y: float = 0.0) -> Trajectory:
    return traj_from_fn(lambda t: (speed * t, y, 0.0))


def stationary_traj() -> Trajectory:
    return traj_from_fn(lambda t: (0.0, 0.0, 0.0))


def const_accel_traj(v0: float, a: float) -> Trajectory:
    """Straight-line motion with clamped-at-zero constant acceleration."""

    def x_at(t):
        if a < 0 and v0 + a * t < 0:
            t_stop = v0 / -a
            return v0 * t_stop + 0.5 * a * t_stop * t_stop
        return v0 * t + 0.5 * a * t * t

    return traj_from_fn(lambda t: (x_at(t), 0.0, 0.0))


def lateral_profile_traj(speed: float, y_at_knots) -> Trajectory:
    """Forward motion with per-knot lateral offsets (8 values for t=0.5..4.0)."""
    ys = list(y_at_knots)
    assert len(ys) == 8
    return Trajectory(waypoints=tuple(
        (t, Pose2D(speed * t, ys[k], 0.0)) for k, t in enumerate(KNOT_TIMES)))


def rect(x0, y0, x1, y1):
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


def vehicle(agent_id, x, y, heading=0.0, vx=0.0, vy=0.0, length=4.5, width=2.0,
            category="vehicle"):
    return Agent(id=agent_id, box=OrientedBox(Pose2D(x, y, heading), length, width),
                 velocity=(vx, vy), category=category)


def make_scene(
    scene_id="s0",
    ego_speed=10.0,
    agents=(),
    drivable=(rect(-15.0, -8.0, 70.0, 8.0),),
    lane_y=0.0,
    lane_span=(-15.0, 70.0),
    human=None,
    lights=(),
    crosswalks=(),
    ego_pose_map=Pose2D(0.0, 0.0, 0.0),
    driving_command="straight",
    lanes=None,
    route_ids=None,
) -> Scene:
    if lanes is None:
        lanes = (Lane(id="L0", centerline=((lane_span[0], lane_y), (lane_span[1], lane_y)), width=3.5),)
        route_ids = ("L0",)
    return Scene(
        scene_id=scene_id,
        ego=EgoStatus(velocity=ego_speed, acceleration=0.0, driving_command=driving_command),
        ego_box_dims=EGO_DIMS,
        agents=tuple(agents),
        map=MapLayers(
            drivable_area=tuple(drivable),
            lanes=tuple(lanes),
            crosswalks=tuple(crosswalks),
            route_lane_ids=tuple(route_ids) if route_ids else tuple(l.id for l in lanes),
            traffic_lights=tuple(lights),
        ),
        human_trajectory=human if human is not None else straight_traj(ego_speed),
        ego_pose_map=ego_pose_map,
    )


def random_trajectory(rng: np.random.Generator, v0: float) -> Trajectory:
    """Smooth unicycle rollout at knot resolution; speeds stay in [0, 13]."""
    a = rng.uniform(-2.0, 2.0)
    yaw = rng.uniform(-0.25, 0.25)
    x = y = h = 0.0
    v = v0
    wps = []
    for t in KNOT_TIMES:
        v = min(max(v + a * 0.5, 0.0), 13.0)
        h = h + yaw * 0.5
        x += v * 0.5 * math.cos(h)
        y += v * 0.5 * math.sin(h)
        wps.append((t, Pose2D(x, y, h)))
    return Trajectory(waypoints=tuple(wps))


def random_scene(rng: np.random.Generator, scene_id: str) -> Scene:
    """Random <=3-agent scene on a rectangular map; speeds capped so no box
    pair can pass through another between 0.1 s samples."""
    ego_speed = rng.uniform(0.0, 12.0)
    n_agents = int(rng.integers(0, 4))
    agents = []
    for i in range(n_agents):
        if rng.random() < 0.75:
            length, width, top = 4.5, 2.0, 9.0
        else:
            length, width, top = 0.8, 0.8, 2.0
        heading = rng.uniform(-math.pi, math.pi)
        speed = rng.uniform(0.0, top)
        agents.append(Agent(
            id=f"a{i}",
            box=OrientedBox(Pose2D(rng.uniform(-5.0, 45.0), rng.uniform(-7.0, 7.0), heading),
                            length, width),
            velocity=(speed * math.cos(heading), speed * math.sin(heading)),
            category="vehicle" if length > 1 else "pedestrian",
        ))
    half_width = rng.uniform(3.0, 9.0)
    return make_scene(
        scene_id=scene_id,
        ego_speed=ego_speed,
        agents=agents,
        drivable=(rect(-15.0, -half_width, 70.0, half_width),),
        human=random_trajectory(rng, ego_speed),
    )


@pytest.fixture
def free_road_scene():
    return make_scene()
