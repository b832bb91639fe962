"""Deterministic bird's-eye-view rasterizer.

Scenes render ego-centered (canvas center, heading up) with one candidate
trajectory overlaid as a green dotted polyline plus circular waypoint
markers. Everything is integer-rule rasterization on a numpy canvas
(scanline polygon fill, Bresenham lines, disk spans) encoded to PNG by
hand, so output bytes are identical across runs and platforms; no font or
anti-aliasing dependence. Geometry outside the canvas clips silently.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .geometry import box_corners
from .scenes import Scene, Trajectory

Color = tuple[int, int, int]


@dataclass(frozen=True)
class Palette:
    background: Color = (18, 18, 22)
    drivable: Color = (70, 70, 76)
    lane_line: Color = (150, 150, 155)
    crosswalk: Color = (124, 110, 88)
    agent: Color = (66, 135, 245)
    ego: Color = (220, 50, 47)
    waypoint: Color = (64, 200, 96)


@dataclass(frozen=True)
class RenderSpec:
    """Raster parameters.

    The visible range is what the canvas covers at meters_per_pixel with
    the ego pinned to the canvas center: +/- 38.4 m along both axes for
    the defaults. Traffic lights are not drawn.
    """

    canvas: tuple[int, int] = (512, 512)  # (width, height) pixels
    meters_per_pixel: float = 0.15
    palette: Palette = field(default_factory=Palette)
    dash_on: int = 3
    dash_off: int = 3
    marker_radius: int = 3
    line_thickness: int = 1

    def __post_init__(self):
        if self.meters_per_pixel <= 0:
            raise ValueError("meters_per_pixel must be positive")
        if self.canvas[0] < 2 or self.canvas[1] < 2:
            raise ValueError("canvas too small")

    def range_m(self) -> tuple[float, float]:
        """Half-extent shown around the ego, (forward, lateral) meters."""
        return (self.canvas[1] / 2 * self.meters_per_pixel,
                self.canvas[0] / 2 * self.meters_per_pixel)

    def to_px(self, xy: np.ndarray) -> np.ndarray:
        """Ego-frame meters -> float pixel (col, row); +x up, +y left."""
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        cx, cy = self.canvas[0] / 2, self.canvas[1] / 2
        return np.stack([cx - xy[:, 1] / self.meters_per_pixel,
                         cy - xy[:, 0] / self.meters_per_pixel], axis=1)


def _round_px(v: float) -> int:
    return int(np.floor(v + 0.5))


def fill_polygon(img: np.ndarray, pts_px: np.ndarray, color: Color) -> None:
    """Even-odd scanline fill at pixel centers (row + 0.5)."""
    h, w, _ = img.shape
    pts = np.asarray(pts_px, dtype=float)
    if len(pts) < 3:
        return
    y0 = max(0, int(np.floor(pts[:, 1].min())))
    y1 = min(h - 1, int(np.ceil(pts[:, 1].max())))
    col = np.array(color, dtype=np.uint8)
    for row in range(y0, y1 + 1):
        yc = row + 0.5
        xs = []
        for i in range(len(pts)):
            x1, yy1 = pts[i]
            x2, yy2 = pts[(i + 1) % len(pts)]
            if (yy1 <= yc < yy2) or (yy2 <= yc < yy1):
                xs.append(x1 + (yc - yy1) / (yy2 - yy1) * (x2 - x1))
        xs.sort()
        for k in range(0, len(xs) - 1, 2):
            lo = max(0, int(np.ceil(xs[k] - 0.5)))
            hi = min(w - 1, int(np.floor(xs[k + 1] - 0.5)))
            if hi >= lo:
                img[row, lo:hi + 1] = col


def _plot(img: np.ndarray, col: int, row: int, color, thickness: int) -> None:
    h, w, _ = img.shape
    r = thickness // 2
    for dr in range(-r, thickness - r):
        for dc in range(-r, thickness - r):
            rr, cc = row + dr, col + dc
            if 0 <= rr < h and 0 <= cc < w:
                img[rr, cc] = color


def draw_line(img: np.ndarray, p0, p1, color: Color, dash=None, thickness: int = 1,
              dash_phase: int = 0) -> int:
    """Bresenham line; dash = (on, off) pixel counts. Returns the dash phase
    after the line so polylines dash continuously."""
    c0, r0 = _round_px(p0[0]), _round_px(p0[1])
    c1, r1 = _round_px(p1[0]), _round_px(p1[1])
    col = np.array(color, dtype=np.uint8)
    dc, dr = abs(c1 - c0), abs(r1 - r0)
    sc = 1 if c0 < c1 else -1
    sr = 1 if r0 < r1 else -1
    err = dc - dr
    k = dash_phase
    while True:
        if dash is None or (k % (dash[0] + dash[1])) < dash[0]:
            _plot(img, c0, r0, col, thickness)
        k += 1
        if c0 == c1 and r0 == r1:
            return k
        e2 = 2 * err
        if e2 > -dr:
            err -= dr
            c0 += sc
        if e2 < dc:
            err += dc
            r0 += sr


def fill_circle(img: np.ndarray, center_px, radius: int, color: Color) -> None:
    h, w, _ = img.shape
    cc, cr = _round_px(center_px[0]), _round_px(center_px[1])
    col = np.array(color, dtype=np.uint8)
    for dr in range(-radius, radius + 1):
        row = cr + dr
        if not 0 <= row < h:
            continue
        half = int(np.floor(np.sqrt(radius * radius - dr * dr)))
        lo, hi = max(0, cc - half), min(w - 1, cc + half)
        if hi >= lo:
            img[row, lo:hi + 1] = col


def _polyline(img, pts_px, color, dash=None, thickness=1):
    phase = 0
    for a, b in zip(pts_px[:-1], pts_px[1:]):
        phase = draw_line(img, a, b, color, dash=dash, thickness=thickness,
                          dash_phase=phase)


def _draw_scene_base(img: np.ndarray, scene: Scene, spec: RenderSpec) -> None:
    pal = spec.palette
    for poly in scene.map.drivable_area:
        fill_polygon(img, spec.to_px(poly), pal.drivable)
    for poly in scene.map.crosswalks:
        fill_polygon(img, spec.to_px(poly), pal.crosswalk)
    for lane in scene.map.lanes:
        _polyline(img, spec.to_px(lane.centerline), pal.lane_line)
    for agent in scene.agents:
        c = agent.box.center
        corners = box_corners(c.x, c.y, c.heading, agent.box.length, agent.box.width)
        fill_polygon(img, spec.to_px(corners), pal.agent)


def _draw_ego(img: np.ndarray, scene: Scene, spec: RenderSpec) -> None:
    corners = box_corners(0.0, 0.0, 0.0, scene.ego_box_dims[0], scene.ego_box_dims[1])
    fill_polygon(img, spec.to_px(corners), spec.palette.ego)


def _draw_trajectory(img: np.ndarray, traj: Trajectory, spec: RenderSpec) -> None:
    pts = np.vstack([[0.0, 0.0], [[p.x, p.y] for _, p in traj.waypoints]])
    px = spec.to_px(pts)
    _polyline(img, px, spec.palette.waypoint, dash=(spec.dash_on, spec.dash_off),
              thickness=spec.line_thickness)
    for p in px[1:]:
        fill_circle(img, p, spec.marker_radius, spec.palette.waypoint)


def render_frame(scene: Scene, traj: Trajectory, spec: RenderSpec) -> np.ndarray:
    """Raw HxWx3 uint8 raster, ego-frame, before PNG encoding."""
    scene = scene.in_ego_frame()
    w, h = spec.canvas
    img = np.empty((h, w, 3), dtype=np.uint8)
    img[:] = np.array(spec.palette.background, dtype=np.uint8)
    _draw_scene_base(img, scene, spec)
    _draw_ego(img, scene, spec)
    _draw_trajectory(img, traj, spec)
    return img


def encode_png(img: np.ndarray) -> bytes:
    """Minimal 8-bit RGB PNG (filter 0 rows, fixed zlib level)."""
    h, w, _ = img.shape
    raw = b"".join(b"\x00" + img[r].tobytes() for r in range(h))
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)

    def chunk(tag: bytes, data: bytes) -> bytes:
        return (struct.pack(">I", len(data)) + tag + data
                + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF))

    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", ihdr)
            + chunk(b"IDAT", zlib.compress(raw, 6)) + chunk(b"IEND", b""))


def render_bev(scene: Scene, traj: Trajectory, spec: RenderSpec = RenderSpec()) -> bytes:
    return encode_png(render_frame(scene, traj, spec))


def render_pair(scene: Scene, pair, spec: RenderSpec = RenderSpec()) -> tuple[bytes, bytes]:
    """One render per slot; identical except the trajectory layer."""
    return (render_bev(scene, pair.slot_a.trajectory, spec),
            render_bev(scene, pair.slot_b.trajectory, spec))
