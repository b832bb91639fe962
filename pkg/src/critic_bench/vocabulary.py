"""Static trajectory vocabulary: kinematic grid generation plus batch scoring.

Entries are constant-curvature, piecewise-constant-acceleration unicycle
rollouts over the 4 s horizon. Arc lengths use the closed-form integral of
the speed profile, so waypoints are exact (no numeric integration error).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import VOCAB_SCHEMA
from .geometry import normalize_angle
from .metrics import ConfigurationError, MetricConfig, ScoringContext, UndefinedScoreError
from .scenes import (
    TRAJ_POINTS,
    TRAJ_SPACING,
    Pose2D,
    Scene,
    SubScores,
    Trajectory,
    subscores_from_json,
    subscores_to_json,
    trajectory_from_json,
    trajectory_to_json,
)

DEDUP_DISTANCE = 0.05  # meters; max-over-waypoints closeness that collapses entries

DEFAULT_SPEEDS = tuple(float(v) for v in range(0, 16))
DEFAULT_CURVATURES = tuple(round(-0.05 + 0.005 * k, 3) for k in range(21))
DEFAULT_ACCEL_PROFILES = (
    (-3.0,), (-2.0,), (-1.0,), (0.0,), (0.5,), (1.0,),
    (-2.0, 0.0), (0.0, -2.0), (1.0, -1.0), (-1.0, 1.0), (2.0, -2.0), (0.0, 1.5),
)


@dataclass(frozen=True)
class VocabularyParams:
    """Grid axes; an accel profile is applied over equal splits of the horizon."""

    speeds: tuple = DEFAULT_SPEEDS
    curvatures: tuple = DEFAULT_CURVATURES
    accel_profiles: tuple = DEFAULT_ACCEL_PROFILES

    def __post_init__(self):
        if not self.speeds or not self.curvatures or not self.accel_profiles:
            raise ValueError("vocabulary grids must be nonempty")

    def to_json(self) -> dict:
        return {
            "speeds": list(self.speeds),
            "curvatures": list(self.curvatures),
            "accel_profiles": [list(p) for p in self.accel_profiles],
        }

    @staticmethod
    def from_json(d: dict) -> "VocabularyParams":
        return VocabularyParams(
            speeds=tuple(float(v) for v in d["speeds"]),
            curvatures=tuple(float(v) for v in d["curvatures"]),
            accel_profiles=tuple(tuple(float(a) for a in p) for p in d["accel_profiles"]),
        )


@dataclass(frozen=True)
class Vocabulary:
    entries: tuple[Trajectory, ...]
    generation_params: VocabularyParams


def profile_accel_at(profile, t: float) -> float:
    """Acceleration in effect at time t for an n-segment profile."""
    horizon = TRAJ_POINTS * TRAJ_SPACING
    seg = min(int(t / (horizon / len(profile))), len(profile) - 1)
    return profile[seg]


def speed_profile_at_knots(v0: float, profile) -> list[float]:
    """Speeds at the 9 knot times under the profile, clamped at zero."""
    out = [v0]
    v = v0
    for k in range(TRAJ_POINTS):
        a = profile_accel_at(profile, k * TRAJ_SPACING)
        v = max(0.0, v + a * TRAJ_SPACING)
        out.append(v)
    return out


def _step_arc_length(v: float, a: float, dt: float) -> float:
    """Distance covered in dt under accel a from speed v, stopping at v=0."""
    if a < 0 and v + a * dt < 0:
        t_stop = v / -a
        return v * t_stop + 0.5 * a * t_stop * t_stop
    return v * dt + 0.5 * a * dt * dt


def rollout_entry(v0: float, curvature: float, profile) -> Trajectory:
    """Closed-form constant-curvature rollout from the origin pose."""
    x = y = h = 0.0
    v = v0
    wps = []
    for k in range(TRAJ_POINTS):
        t = k * TRAJ_SPACING
        a = profile_accel_at(profile, t)
        s = _step_arc_length(v, a, TRAJ_SPACING)
        v = max(0.0, v + a * TRAJ_SPACING)
        if abs(curvature) < 1e-12:
            x += s * math.cos(h)
            y += s * math.sin(h)
        else:
            h2 = h + curvature * s
            x += (math.sin(h2) - math.sin(h)) / curvature
            y += (math.cos(h) - math.cos(h2)) / curvature
            h = h2
        wps.append((t + TRAJ_SPACING, Pose2D(x, y, normalize_angle(h))))
    return Trajectory(waypoints=tuple(wps))


def _waypoint_matrix(traj: Trajectory) -> np.ndarray:
    return np.array([[p.x, p.y] for _, p in traj.waypoints])


def build_vocabulary(params: VocabularyParams) -> Vocabulary:
    """One entry per grid combination, deduplicated in grid order."""
    kept: list[Trajectory] = []
    kept_xy = np.empty((0, TRAJ_POINTS, 2))
    for v0 in params.speeds:
        for curvature in params.curvatures:
            for profile in params.accel_profiles:
                entry = rollout_entry(v0, curvature, profile)
                xy = _waypoint_matrix(entry)
                if kept_xy.shape[0]:
                    gaps = np.hypot(*(kept_xy - xy[None]).transpose(2, 0, 1)).max(axis=1)
                    if float(gaps.min()) < DEDUP_DISTANCE:
                        continue
                kept.append(entry)
                kept_xy = np.concatenate([kept_xy, xy[None]], axis=0)
    return Vocabulary(entries=tuple(kept), generation_params=params)


@dataclass(frozen=True)
class ScoredEntry:
    trajectory: Trajectory
    scores: Optional[SubScores]
    error: Optional[str] = None


def score_vocabulary(scene: Scene, vocab: Vocabulary, config: MetricConfig) -> list[ScoredEntry]:
    """Score every entry against the scene; engine errors mark the entry
    unscorable instead of aborting the batch."""
    ctx = ScoringContext(scene, config)
    out = []
    for entry in vocab.entries:
        try:
            out.append(ScoredEntry(entry, ctx.score(entry)))
        except (UndefinedScoreError, ConfigurationError) as e:
            out.append(ScoredEntry(entry, None, error=str(e)))
    return out


# --- serialization ----------------------------------------------------------


def write_vocabulary(path, vocab: Vocabulary) -> None:
    with open(path, "w") as f:
        header = {"schema": VOCAB_SCHEMA, "generation_params": vocab.generation_params.to_json()}
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for entry in vocab.entries:
            f.write(json.dumps({"trajectory": trajectory_to_json(entry)}, sort_keys=True) + "\n")


def read_vocabulary(path) -> Vocabulary:
    with open(path) as f:
        header = json.loads(f.readline())
        if header.get("schema") != VOCAB_SCHEMA:
            raise ValueError(f"expected schema {VOCAB_SCHEMA!r}, got {header.get('schema')!r}")
        entries = tuple(trajectory_from_json(json.loads(line)["trajectory"])
                        for line in f if line.strip())
    return Vocabulary(entries=entries, generation_params=VocabularyParams.from_json(header["generation_params"]))


def write_scored_entries(path, scene_id: str, entries: list[ScoredEntry]) -> None:
    with open(path, "w") as f:
        for e in entries:
            row = {
                "scene_id": scene_id,
                "trajectory": trajectory_to_json(e.trajectory),
                "scores": None if e.scores is None else subscores_to_json(e.scores),
                "error": e.error,
            }
            f.write(json.dumps(row, sort_keys=True) + "\n")


def read_scored_entries(path) -> tuple[str, list[ScoredEntry]]:
    entries = []
    scene_id = ""
    with open(path) as f:
        for line in f:
            if not line.strip():
                continue
            row = json.loads(line)
            scene_id = row["scene_id"]
            entries.append(ScoredEntry(
                trajectory=trajectory_from_json(row["trajectory"]),
                scores=None if row["scores"] is None else subscores_from_json(row["scores"]),
                error=row.get("error"),
            ))
    return scene_id, entries
