"""Line segment extraction from single scans.

Recursive endpoint-fit splitting over contiguous runs of valid beams,
with runs also broken wherever consecutive points are further apart than
max_point_gap. Each accepted run is refit with a total-least-squares line
(principal component of the run's scatter); endpoints are the projections
of the run's extreme points onto that line, ordered by scan angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import LineSegment, Point
from .scan_io import LaserScan


@dataclass(frozen=True)
class ExtractionParams:
    min_length: float = 0.6
    min_points: int = 10
    split_threshold: float = 0.05
    max_point_gap: float = 0.5

    def __post_init__(self) -> None:
        if self.min_length <= 0:
            raise ValueError(f"min_length must be positive, got {self.min_length!r}")
        if self.min_points < 2:
            raise ValueError(f"min_points must be >= 2, got {self.min_points!r}")
        if self.split_threshold <= 0:
            raise ValueError(f"split_threshold must be positive, got {self.split_threshold!r}")
        if self.max_point_gap <= 0:
            raise ValueError(f"max_point_gap must be positive, got {self.max_point_gap!r}")


def _chord_distances(points: np.ndarray) -> np.ndarray:
    """Distance of each point to the chord between the run's first and last point."""
    p0 = points[0]
    p1 = points[-1]
    chord = p1 - p0
    norm = math.hypot(chord[0], chord[1])
    if norm == 0.0:
        return np.hypot(points[:, 0] - p0[0], points[:, 1] - p0[1])
    rel = points - p0
    return np.abs(rel[:, 0] * chord[1] - rel[:, 1] * chord[0]) / norm


def _split_runs(points: np.ndarray, lo: int, hi: int, threshold: float, out: list) -> None:
    """Recursively split [lo, hi] (inclusive) at the farthest-from-chord point."""
    if hi - lo < 2:
        out.append((lo, hi))
        return
    dists = _chord_distances(points[lo : hi + 1])
    k = int(np.argmax(dists))
    if dists[k] <= threshold:
        out.append((lo, hi))
        return
    _split_runs(points, lo, lo + k, threshold, out)
    _split_runs(points, lo + k, hi, threshold, out)


def _fit_segment(points: np.ndarray) -> LineSegment | None:
    """Total-least-squares line through the points, clipped to the run extent."""
    mean = points.mean(axis=0)
    rel = points - mean
    cov = rel.T @ rel
    _w, v = np.linalg.eigh(cov)
    direction = v[:, 1]  # eigenvector of the larger eigenvalue
    # orient along the run so start/end follow scan angular order
    span = points[-1] - points[0]
    if float(span @ direction) < 0.0:
        direction = -direction
    t0 = float((points[0] - mean) @ direction)
    t1 = float((points[-1] - mean) @ direction)
    if t1 <= t0:
        return None
    start = Point(float(mean[0] + t0 * direction[0]), float(mean[1] + t0 * direction[1]))
    end = Point(float(mean[0] + t1 * direction[0]), float(mean[1] + t1 * direction[1]))
    return LineSegment(start=start, end=end, weight=1)


def extract_from_points(points: np.ndarray, params: ExtractionParams) -> list[LineSegment]:
    """Extract segments from an ordered (n, 2) point array (all points valid)."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError("points must be an (n, 2) array")
    segments: list[LineSegment] = []
    n = len(points)
    if n == 0:
        return segments

    # break at large gaps first
    gaps = np.hypot(np.diff(points[:, 0]), np.diff(points[:, 1]))
    run_start = 0
    runs: list[tuple[int, int]] = []
    for i, g in enumerate(gaps):
        if g > params.max_point_gap:
            runs.append((run_start, i))
            run_start = i + 1
    runs.append((run_start, n - 1))

    for lo, hi in runs:
        if hi - lo + 1 < params.min_points:
            continue
        pieces: list[tuple[int, int]] = []
        _split_runs(points, lo, hi, params.split_threshold, pieces)
        for a, b in pieces:
            count = b - a + 1
            if count < params.min_points:
                continue
            seg = _fit_segment(points[a : b + 1])
            if seg is None or seg.length < params.min_length:
                continue
            segments.append(seg)
    return segments


def scan_points(scan: LaserScan) -> tuple[np.ndarray, np.ndarray]:
    """Cartesian points of all beams plus a validity mask, in the sensor frame."""
    ranges = np.asarray(scan.ranges, dtype=float)
    idx = np.arange(len(ranges))
    angles = scan.angle_min + idx * scan.angle_increment
    valid = np.isfinite(ranges) & (ranges > 0.0) & (ranges < scan.max_range)
    pts = np.column_stack((ranges * np.cos(angles), ranges * np.sin(angles)))
    return pts, valid


def extract_segments(scan: LaserScan, params: ExtractionParams) -> list[LineSegment]:
    """Extract segments from one scan, in the sensor's local frame.

    Invalid beams terminate runs exactly like oversized point gaps.
    """
    pts, valid = scan_points(scan)
    segments: list[LineSegment] = []
    n = len(pts)
    i = 0
    while i < n:
        if not valid[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and valid[j + 1]:
            j += 1
        segments.extend(extract_from_points(pts[i : j + 1], params))
        i = j + 1
    return segments
