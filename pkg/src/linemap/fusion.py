"""Fusion conditions and the weighted merge for redundant line segments.

Two segments are considered redundant representations of the same physical
structure when three gates all pass, evaluated in this order:

1. heading deviation:   |norm_angle(theta_m - theta_s)| <= theta_max
2. separation distance: max perpendicular distance of the candidate's
   endpoints to the map segment's supporting line <= d_max
3. overlap length:      projection overlap p >= p_min (p is negative when
   the projections are disjoint, so p_min < 0 tolerates small gaps)

The merge replaces any number of redundant segments with a single segment
whose center and heading are weight-weighted means and whose endpoints are
the two extreme projections of all input endpoints onto the merged line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import LineSegment, Point, norm_angle


@dataclass(frozen=True)
class FusionThresholds:
    """Gate thresholds: angles in radians, distances in meters.

    p_min may be negative; a segment pair with a projection gap smaller
    than |p_min| still merges.
    """

    theta_max: float
    d_max: float
    p_min: float

    def __post_init__(self) -> None:
        if not (0.0 < self.theta_max < math.pi / 2):
            raise ValueError(f"theta_max must be in (0, pi/2), got {self.theta_max!r}")
        if self.d_max <= 0.0:
            raise ValueError(f"d_max must be positive, got {self.d_max!r}")
        if not math.isfinite(self.p_min):
            raise ValueError(f"p_min must be finite, got {self.p_min!r}")


@dataclass(frozen=True)
class FusionMeasurements:
    """Raw gate quantities for one map/candidate pair."""

    heading_deviation: float
    separation_distance: float
    overlap_length: float


@dataclass
class GateCounters:
    """Instrumentation: how many pairs reached each gate."""

    heading: int = 0
    separation: int = 0
    overlap: int = 0
    passed: int = 0

    def reset(self) -> None:
        self.heading = self.separation = self.overlap = self.passed = 0


def heading_deviation(l_map: LineSegment, l_scan: LineSegment) -> float:
    """Absolute normalized heading difference between the two segments."""
    return abs(norm_angle(l_map.heading - l_scan.heading))


def separation_distance(l_map: LineSegment, l_scan: LineSegment) -> float:
    """Larger perpendicular distance of l_scan's endpoints to l_map's line."""
    line = l_map.general_form
    return max(line.distance_to(l_scan.start), line.distance_to(l_scan.end))


def overlap_length(
    l_map: LineSegment, l_scan: LineSegment
) -> tuple[float, tuple[Point, Point] | None]:
    """Signed overlap of l_scan's projection onto l_map's extent.

    Returns (p, endpoints). p > 0 is the length of the common interval and
    endpoints are its bounds on l_map's line; p <= 0 means the projections
    are disjoint by a gap of |p| (or just touch) and endpoints is None.
    """
    t0 = l_map.project_abscissa(l_scan.start)
    t1 = l_map.project_abscissa(l_scan.end)
    if t0 > t1:
        t0, t1 = t1, t0
    lo = max(0.0, t0)
    hi = min(l_map.length, t1)
    p = hi - lo
    if p <= 0.0:
        return p, None
    return p, (l_map.point_at(lo), l_map.point_at(hi))


def measure(l_map: LineSegment, l_scan: LineSegment) -> FusionMeasurements:
    """All three gate quantities, without thresholding."""
    return FusionMeasurements(
        heading_deviation=heading_deviation(l_map, l_scan),
        separation_distance=separation_distance(l_map, l_scan),
        overlap_length=overlap_length(l_map, l_scan)[0],
    )


def satisfies_fusion_conditions(
    l_map: LineSegment,
    l_scan: LineSegment,
    thresholds: FusionThresholds,
    counters: GateCounters | None = None,
) -> bool:
    """Evaluate the three gates with short-circuiting, cheapest first."""
    if counters is not None:
        counters.heading += 1
    if abs(norm_angle(l_map.heading - l_scan.heading)) > thresholds.theta_max:
        return False
    if counters is not None:
        counters.separation += 1
    line = l_map.general_form
    d = line.distance_to(l_scan.start)
    d2 = line.distance_to(l_scan.end)
    if d2 > d:
        d = d2
    if d > thresholds.d_max:
        return False
    if counters is not None:
        counters.overlap += 1
    t0 = l_map.project_abscissa(l_scan.start)
    t1 = l_map.project_abscissa(l_scan.end)
    if t0 > t1:
        t0, t1 = t1, t0
    p = min(l_map.length, t1) - max(0.0, t0)
    if p < thresholds.p_min:
        return False
    if counters is not None:
        counters.passed += 1
    return True


def merge_segments(segments: list[LineSegment]) -> LineSegment:
    """Fuse redundant segments into one, conserving total weight.

    Center and heading are weight-weighted means; the heading mean is taken
    relative to the highest-weight input so near-antipodal wrap cannot
    corrupt it (inputs are expected to be mutually near-parallel because
    they passed the heading gate). Endpoints are the extreme projections of
    every input endpoint onto the merged line. A single input is returned
    unchanged.
    """
    if not segments:
        raise ValueError("merge_segments needs at least one segment")
    if len(segments) == 1:
        return segments[0]

    total = 0
    ref = segments[0]
    for seg in segments:
        total += seg.weight
        if seg.weight > ref.weight:
            ref = seg

    theta_ref = ref.heading
    cx = 0.0
    cy = 0.0
    dtheta_sum = 0.0
    for seg in segments:
        w = seg.weight
        c = seg.center
        cx += w * c.x
        cy += w * c.y
        rel = norm_angle(seg.heading - theta_ref)
        assert abs(rel) <= math.pi / 2, "merge inputs must be near-parallel"
        dtheta_sum += w * rel
    inv = 1.0 / total
    center = Point(cx * inv, cy * inv)
    theta = norm_angle(theta_ref + dtheta_sum * inv)

    ux = math.cos(theta)
    uy = math.sin(theta)
    t_min = math.inf
    t_max = -math.inf
    for seg in segments:
        for p in (seg.start, seg.end):
            t = (p.x - center.x) * ux + (p.y - center.y) * uy
            if t < t_min:
                t_min = t
            if t > t_max:
                t_max = t
    if t_max <= t_min:
        raise ValueError("merged segment collapses to a point")
    start = Point(center.x + ux * t_min, center.y + uy * t_min)
    end = Point(center.x + ux * t_max, center.y + uy * t_max)
    return LineSegment(start=start, end=end, weight=total)
