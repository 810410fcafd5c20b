"""Synthetic worlds: wall soup, planned loop trajectories, ray-cast scans,
range noise and systematic odometry drift.

Worlds are JSON: a list of wall segments, a list of path waypoints, beam
layout and sensor limits. Generation is fully deterministic for a given
seed: the same world+seed+noise always produces byte-identical logs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import Point, Pose2D, norm_angle
from .scan_io import LaserScan, Trajectory


@dataclass(frozen=True)
class NoiseParams:
    """range_sigma in meters; drift is a deterministic systematic model:
    heading_bias_rad_per_m twists the integrated heading per meter traveled,
    translation_scale stretches odometry translation."""

    range_sigma: float = 0.0
    heading_bias_rad_per_m: float = 0.0
    translation_scale: float = 1.0

    def drifts(self) -> bool:
        return self.heading_bias_rad_per_m != 0.0 or self.translation_scale != 1.0


@dataclass
class WorldSpec:
    walls: list[tuple[float, float, float, float]]
    waypoints: list[tuple[float, float]]
    beams: int = 181
    fov_deg: float = 180.0
    max_range: float = 80.0
    step: float = 0.15
    corner_step_deg: float = 22.5
    loops: int = 1

    def __post_init__(self) -> None:
        if len(self.walls) == 0:
            raise ValueError("world needs at least one wall")
        if len(self.waypoints) < 2:
            raise ValueError("world needs at least two waypoints")
        if self.beams < 2:
            raise ValueError("world needs at least two beams")
        if self.step <= 0:
            raise ValueError("step must be positive")

    def to_json(self) -> str:
        return json.dumps(
            {
                "walls": [list(w) for w in self.walls],
                "waypoints": [list(w) for w in self.waypoints],
                "beams": self.beams,
                "fov_deg": self.fov_deg,
                "max_range": self.max_range,
                "step": self.step,
                "corner_step_deg": self.corner_step_deg,
                "loops": self.loops,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "WorldSpec":
        data = json.loads(text)
        return cls(
            walls=[tuple(w) for w in data["walls"]],
            waypoints=[tuple(w) for w in data["waypoints"]],
            beams=int(data.get("beams", 181)),
            fov_deg=float(data.get("fov_deg", 180.0)),
            max_range=float(data.get("max_range", 80.0)),
            step=float(data.get("step", 0.15)),
            corner_step_deg=float(data.get("corner_step_deg", 22.5)),
            loops=int(data.get("loops", 1)),
        )


def plan_trajectory(spec: WorldSpec) -> Trajectory:
    """Exact poses along the waypoint polyline.

    Legs are sampled every `step` meters facing along the leg; at each
    interior corner the robot turns in place in corner_step_deg increments.
    The waypoint list is traversed `loops` times (closing back to the first
    waypoint each lap when the lap is a loop).
    """
    pts = [Point(x, y) for x, y in spec.waypoints]
    closed = (
        math.isclose(pts[0].x, pts[-1].x, abs_tol=1e-9)
        and math.isclose(pts[0].y, pts[-1].y, abs_tol=1e-9)
    )
    lap = pts if closed else pts + [pts[0]]

    poses: list[Pose2D] = []

    def leg_heading(a: Point, b: Point) -> float:
        return math.atan2(b.y - a.y, b.x - a.x)

    for _lap in range(spec.loops):
        for k in range(len(lap) - 1):
            a, b = lap[k], lap[k + 1]
            heading = leg_heading(a, b)
            length = a.distance_to(b)
            n_steps = max(1, int(math.floor(length / spec.step)))
            for s in range(n_steps):
                t = s * spec.step
                poses.append(
                    Pose2D(
                        a.x + math.cos(heading) * t,
                        a.y + math.sin(heading) * t,
                        heading,
                    )
                )
            # in-place rotation toward the next leg
            nxt = lap[(k + 2) % len(lap)] if k + 2 < len(lap) else lap[1]
            next_heading = leg_heading(b, nxt)
            turn = norm_angle(next_heading - heading)
            sub = math.radians(spec.corner_step_deg)
            n_turns = int(abs(turn) / sub)
            for s in range(1, n_turns + 1):
                poses.append(Pose2D(b.x, b.y, heading + math.copysign(sub * s, turn)))

    return Trajectory.from_pairs((i, pose) for i, pose in enumerate(poses))


def apply_drift(trajectory: Trajectory, noise: NoiseParams) -> Trajectory:
    """Integrate relative motions with the systematic drift model applied."""
    entries = list(trajectory)
    if not entries:
        return trajectory
    drifted = [entries[0][1]]
    for (_, prev), (_, cur) in zip(entries, entries[1:]):
        dtheta = norm_angle(cur.theta - prev.theta)
        c, s = math.cos(prev.theta), math.sin(prev.theta)
        dx_world = cur.x - prev.x
        dy_world = cur.y - prev.y
        # relative translation in the previous pose's frame
        fx = c * dx_world + s * dy_world
        fy = -s * dx_world + c * dy_world
        ds = math.hypot(fx, fy)
        ref = drifted[-1]
        theta = norm_angle(ref.theta + dtheta + noise.heading_bias_rad_per_m * ds)
        scale = noise.translation_scale
        c2, s2 = math.cos(ref.theta), math.sin(ref.theta)
        x = ref.x + c2 * fx * scale - s2 * fy * scale
        y = ref.y + s2 * fx * scale + c2 * fy * scale
        drifted.append(Pose2D(x, y, theta))
    return Trajectory.from_pairs(
        (idx, pose) for (idx, _), pose in zip(entries, drifted)
    )


def _raycast(spec: WorldSpec, pose: Pose2D) -> np.ndarray:
    """Distance to the nearest wall for each beam, max_range when nothing hits."""
    n = spec.beams
    fov = math.radians(spec.fov_deg)
    angle_min = -fov / 2.0
    inc = fov / (n - 1)
    angles = pose.theta + angle_min + inc * np.arange(n)
    dirs_x = np.cos(angles)
    dirs_y = np.sin(angles)
    best = np.full(n, float(spec.max_range))
    ox, oy = pose.x, pose.y
    for x1, y1, x2, y2 in spec.walls:
        ex = x2 - x1
        ey = y2 - y1
        denom = dirs_x * ey - dirs_y * ex
        ax = x1 - ox
        ay = y1 - oy
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (ax * ey - ay * ex) / denom
            s = (ax * dirs_y - ay * dirs_x) / denom
        hit = (np.abs(denom) > 1e-12) & (t > 1e-9) & (s >= 0.0) & (s <= 1.0)
        best = np.where(hit & (t < best), t, best)
    return best


@dataclass
class SynthResult:
    scans: list[LaserScan]
    exact_trajectory: Trajectory
    odometry_trajectory: Trajectory
    world: WorldSpec = field(repr=False, default=None)  # type: ignore[assignment]


def generate(spec: WorldSpec, noise: NoiseParams = NoiseParams(), seed: int = 0) -> SynthResult:
    """Ray-cast the planned trajectory; scans carry the drifted odometry pose."""
    exact = plan_trajectory(spec)
    odom = apply_drift(exact, noise) if noise.drifts() else exact
    rng = np.random.default_rng(seed)
    fov = math.radians(spec.fov_deg)
    scans: list[LaserScan] = []
    for idx, pose in exact:
        ranges = _raycast(spec, pose)
        if noise.range_sigma > 0.0:
            hits = ranges < spec.max_range
            jitter = rng.normal(0.0, noise.range_sigma, size=len(ranges))
            noisy = np.where(hits, np.maximum(ranges + jitter, 1e-3), ranges)
        else:
            noisy = ranges
        scans.append(
            LaserScan(
                scan_index=idx,
                ranges=tuple(float(r) for r in noisy),
                angle_min=-fov / 2.0,
                angle_increment=fov / (spec.beams - 1),
                max_range=spec.max_range,
                odometry=odom.pose_for(idx),
            )
        )
    return SynthResult(scans=scans, exact_trajectory=exact, odometry_trajectory=odom, world=spec)
