"""Correlation-based map quality, plus error and distance metrics.

A sparse lookup table scores every grid cell by its proximity to the
registered scan points (Gaussian kernel, max over points, cut off at two
sigma). Map segments are rasterized to directed pixels; redundant segments
are detected with a strip-superposition test and penalize the score:

    q = (sum of non-redundant pixel scores - lambda * sum of redundant
         pixel scores) / total pixel count

The error metric is the pooled mean perpendicular distance of original
segment centers (re-registered under a reference trajectory) to their
final map lines; the distance metric adds a weighted heading deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .extraction import scan_points
from .fusion import FusionThresholds
from .geometry import LineSegment, norm_angle, transform_to_global
from .mapper import OriginalSegment
from .scan_io import LaserScan, SegmentMap, Trajectory

_KEY_SHIFT = np.int64(2) ** 32


@dataclass(frozen=True)
class GridGeometry:
    """Shared raster geometry: cell (i, j) spans [i*res, (i+1)*res) x [j*res, ...)."""

    resolution: float

    def __post_init__(self) -> None:
        if self.resolution <= 0:
            raise ValueError(f"resolution must be positive, got {self.resolution!r}")

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (math.floor(x / self.resolution), math.floor(y / self.resolution))

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        return ((i + 0.5) * self.resolution, (j + 0.5) * self.resolution)


@dataclass
class LookupTable:
    """Sparse max-rule Gaussian smear of the registered scan points."""

    geometry: GridGeometry
    sigma: float
    cells: dict[tuple[int, int], float] = field(default_factory=dict)

    def value(self, cell: tuple[int, int]) -> float:
        return self.cells.get(cell, 0.0)

    def mean_occupied_value(self) -> float:
        if not self.cells:
            return 0.0
        return sum(self.cells.values()) / len(self.cells)


def registered_points(scans: Iterable[LaserScan], trajectory: Trajectory) -> np.ndarray:
    """World-frame points of every valid beam; scans need poses in the trajectory."""
    chunks = []
    for scan in scans:
        pose = trajectory.pose_for(scan.scan_index)
        pts, valid = scan_points(scan)
        pts = pts[valid]
        if len(pts) == 0:
            continue
        c, s = math.cos(pose.theta), math.sin(pose.theta)
        world = np.empty_like(pts)
        world[:, 0] = pose.x + c * pts[:, 0] - s * pts[:, 1]
        world[:, 1] = pose.y + s * pts[:, 0] + c * pts[:, 1]
        chunks.append(world)
    if not chunks:
        return np.empty((0, 2))
    return np.concatenate(chunks, axis=0)


def build_lookup_table_from_points(
    points: np.ndarray,
    resolution: float = 0.01,
    sigma: float = 0.03,
) -> LookupTable:
    """Score cells by exp(-d^2 / (2 sigma^2)) to the nearest point within 2 sigma."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    geometry = GridGeometry(resolution=resolution)
    table = LookupTable(geometry=geometry, sigma=sigma)
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        return table

    radius = 2.0 * sigma
    # window of cells whose center can lie within the cutoff of a point
    half = int(math.floor(radius / resolution + 0.5)) + 1
    offsets = np.arange(-half, half + 1)
    inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma)
    r2_limit = radius * radius * (1.0 + 1e-9)

    store: dict[int, float] = {}
    chunk_size = 4096
    for lo in range(0, len(points), chunk_size):
        chunk = points[lo : lo + chunk_size]
        base_i = np.floor(chunk[:, 0] / resolution).astype(np.int64)
        base_j = np.floor(chunk[:, 1] / resolution).astype(np.int64)
        ii = base_i[:, None] + offsets[None, :]  # (n, w)
        jj = base_j[:, None] + offsets[None, :]
        cx = (ii + 0.5) * resolution
        cy = (jj + 0.5) * resolution
        dx = cx - chunk[:, 0:1]  # (n, w)
        dy = cy - chunk[:, 1:2]
        d2 = dx[:, :, None] ** 2 + dy[:, None, :] ** 2  # (n, w, w)
        mask = d2 <= r2_limit
        if not mask.any():
            continue
        keys = (ii[:, :, None] * _KEY_SHIFT + jj[:, None, :])[mask]
        vals = np.exp(-d2[mask] * inv_two_sigma_sq)
        uniq, inverse = np.unique(keys, return_inverse=True)
        best = np.zeros(len(uniq))
        np.maximum.at(best, inverse, vals)
        for k, v in zip(uniq.tolist(), best.tolist()):
            if v > store.get(k, 0.0):
                store[k] = v

    for k, v in store.items():
        j = k % int(_KEY_SHIFT)
        if j >= int(_KEY_SHIFT) // 2:
            j -= int(_KEY_SHIFT)
        i = (k - j) // int(_KEY_SHIFT)
        table.cells[(int(i), int(j))] = v
    return table


def build_lookup_table(
    scans: Iterable[LaserScan],
    trajectory: Trajectory,
    resolution: float = 0.01,
    sigma: float = 0.03,
) -> LookupTable:
    return build_lookup_table_from_points(
        registered_points(scans, trajectory), resolution=resolution, sigma=sigma
    )


def heading_bin(heading: float, bin_deg: float = 1.0, n_bins: int | None = None) -> int:
    """Quantize a heading to a [0, 360) degree bin."""
    if n_bins is None:
        n_bins = int(round(360.0 / bin_deg))
    deg = math.degrees(heading) % 360.0
    return int(deg / bin_deg) % n_bins


def bin_circular_distance(a: int, b: int, n_bins: int) -> int:
    d = abs(a - b) % n_bins
    return min(d, n_bins - d)


def rasterize_segment(
    segment: LineSegment, geometry: GridGeometry, bin_deg: float = 1.0
) -> tuple[list[tuple[int, int]], int]:
    """Bresenham cells of the segment plus its heading bin.

    Traversal always starts from the lexicographically smaller endpoint
    cell so the cell set is independent of segment direction; the heading
    bin keeps the true direction.
    """
    p0 = (segment.start.x, segment.start.y)
    p1 = (segment.end.x, segment.end.y)
    if p1 < p0:
        p0, p1 = p1, p0
    x0, y0 = geometry.cell_of(*p0)
    x1, y1 = geometry.cell_of(*p1)
    dx = abs(x1 - x0)
    dy = -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    cells = []
    x, y = x0, y0
    while True:
        cells.append((x, y))
        if x == x1 and y == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x += sx
        if e2 <= dx:
            err += dx
            y += sy
    return cells, heading_bin(segment.heading, bin_deg)


def strip_cells(
    segment: LineSegment, half_width: float, geometry: GridGeometry
) -> set[tuple[int, int]]:
    """Cells whose centers lie inside the rectangle of the given half width
    centered on the segment."""
    res = geometry.resolution
    min_x = min(segment.start.x, segment.end.x) - half_width
    max_x = max(segment.start.x, segment.end.x) + half_width
    min_y = min(segment.start.y, segment.end.y) - half_width
    max_y = max(segment.start.y, segment.end.y) + half_width
    i0 = math.floor(min_x / res)
    i1 = math.floor(max_x / res)
    j0 = math.floor(min_y / res)
    j1 = math.floor(max_y / res)
    ii = np.arange(i0, i1 + 1)
    jj = np.arange(j0, j1 + 1)
    cx = (ii + 0.5) * res
    cy = (jj + 0.5) * res
    gx, gy = np.meshgrid(cx, cy, indexing="ij")
    ux, uy = segment.direction
    relx = gx - segment.start.x
    rely = gy - segment.start.y
    along = relx * ux + rely * uy
    across = relx * (-uy) + rely * ux
    inside = (np.abs(across) <= half_width) & (along >= 0.0) & (along <= segment.length)
    sel_i, sel_j = np.nonzero(inside)
    return {(int(ii[a]), int(jj[b])) for a, b in zip(sel_i, sel_j)}


@dataclass(frozen=True)
class RedundancyResult:
    pairs: tuple[tuple[int, int], ...]
    flagged: frozenset[int]  # candidates judged redundant
    members: frozenset[int]  # every index appearing in some pair


def detect_redundant_pairs(
    smap: SegmentMap,
    thresholds: FusionThresholds,
    geometry: GridGeometry,
    superposition_fraction: float = 0.2,
    bin_deg: float = 1.0,
) -> RedundancyResult:
    """Strip-superposition redundancy scan in ascending index order.

    Each candidate is compared against previously accepted (non-redundant)
    segments only and is flagged at most once: redundant if at least the
    given fraction of its pixels falls inside an accepted segment's strip
    and the heading bins differ by no more than theta_max.
    """
    n_bins = int(round(360.0 / bin_deg))
    max_bin_dist = thresholds.theta_max * 180.0 / math.pi / bin_deg + 1e-9
    accepted: list[tuple[int, set[tuple[int, int]], int]] = []
    pairs: list[tuple[int, int]] = []
    flagged: set[int] = set()
    for idx, seg in smap.ordered():
        pixels, hbin = rasterize_segment(seg, geometry, bin_deg)
        partner = None
        for a_idx, a_strip, a_bin in accepted:
            if bin_circular_distance(hbin, a_bin, n_bins) > max_bin_dist:
                continue
            overlap = sum(1 for c in pixels if c in a_strip)
            if overlap >= superposition_fraction * len(pixels) - 1e-9:
                partner = a_idx
                break
        if partner is None:
            accepted.append((idx, strip_cells(seg, thresholds.d_max, geometry), hbin))
        else:
            pairs.append((partner, idx))
            flagged.add(idx)
    members = {i for pair in pairs for i in pair}
    return RedundancyResult(
        pairs=tuple(pairs), flagged=frozenset(flagged), members=frozenset(members)
    )


@dataclass(frozen=True)
class QualityReport:
    q: float
    total_pixels: int
    redundant_pixels: int
    lam: float
    pairs: tuple[tuple[int, int], ...]
    normalized_percent: float


def map_quality(
    smap: SegmentMap,
    table: LookupTable,
    thresholds: FusionThresholds,
    lam: float = 1.0,
    superposition_fraction: float = 0.2,
    bin_deg: float = 1.0,
) -> QualityReport:
    """Eq.-style correlation score with the redundancy penalty.

    Pixels of every member of a redundant pair count negatively. The
    normalized percentage divides q by the table's mean occupied cell value
    for a scale-free figure.
    """
    if not smap.segments:
        raise ValueError("cannot score an empty map")
    redundancy = detect_redundant_pairs(
        smap, thresholds, table.geometry, superposition_fraction, bin_deg
    )
    positive = 0.0
    negative = 0.0
    total_pixels = 0
    redundant_pixels = 0
    for idx, seg in smap.ordered():
        pixels, _bin = rasterize_segment(seg, table.geometry, bin_deg)
        total_pixels += len(pixels)
        score = sum(table.value(c) for c in pixels)
        if idx in redundancy.members:
            redundant_pixels += len(pixels)
            negative += score
        else:
            positive += score
    q = (positive - lam * negative) / total_pixels
    mean_occ = table.mean_occupied_value()
    normalized = (q / mean_occ * 100.0) if mean_occ > 0 else 0.0
    return QualityReport(
        q=q,
        total_pixels=total_pixels,
        redundant_pixels=redundant_pixels,
        lam=lam,
        pairs=redundancy.pairs,
        normalized_percent=normalized,
    )


@dataclass(frozen=True)
class ErrorReport:
    e: float
    total_originals: int
    per_segment: tuple[tuple[int, float], ...]  # (map index, mean center deviation)


def error_metric(
    smap: SegmentMap,
    correspondences: Mapping[int, Sequence[OriginalSegment]],
    trajectory: Trajectory,
) -> ErrorReport:
    """Pooled mean perpendicular distance of re-registered original centers
    to their final map lines."""
    total = 0.0
    count = 0
    per_segment = []
    for idx, seg in smap.ordered():
        if idx not in correspondences:
            raise KeyError(f"no correspondences for map index {idx}")
        line = seg.general_form
        subset_sum = 0.0
        subset = correspondences[idx]
        if not subset:
            raise ValueError(f"empty correspondence subset for map index {idx}")
        for original in subset:
            pose = trajectory.pose_for(original.pose_index)
            world = transform_to_global(original.segment, pose)
            subset_sum += line.distance_to(world.center)
        total += subset_sum
        count += len(subset)
        per_segment.append((idx, subset_sum / len(subset)))
    if count == 0:
        raise ValueError("no originals to score")
    return ErrorReport(e=total / count, total_originals=count, per_segment=tuple(per_segment))


def distance_metric(
    smap: SegmentMap,
    correspondences: Mapping[int, Sequence[OriginalSegment]],
    trajectory: Trajectory,
    w_dist: float = 1.0,
    w_ang: float = 1.0,
) -> float:
    """Error metric extended with a weighted heading deviation term."""
    total = 0.0
    count = 0
    for idx, seg in smap.ordered():
        if idx not in correspondences:
            raise KeyError(f"no correspondences for map index {idx}")
        line = seg.general_form
        for original in correspondences[idx]:
            pose = trajectory.pose_for(original.pose_index)
            world = transform_to_global(original.segment, pose)
            total += w_dist * line.distance_to(world.center)
            total += w_ang * abs(norm_angle(world.heading - seg.heading))
            count += 1
    if count == 0:
        raise ValueError("no originals to score")
    return total / count


def write_pgm(table: LookupTable, path: str | Path) -> None:
    """Dense 8-bit render of the lookup table for visual inspection."""
    if not table.cells:
        Path(path).write_text("P2\n1 1\n255\n0\n", encoding="utf-8")
        return
    cells = table.cells
    is_ = [c[0] for c in cells]
    js = [c[1] for c in cells]
    i0, i1 = min(is_), max(is_)
    j0, j1 = min(js), max(js)
    width = i1 - i0 + 1
    height = j1 - j0 + 1
    img = np.zeros((height, width), dtype=np.uint8)
    for (i, j), v in cells.items():
        img[j1 - j, i - i0] = int(round(v * 255.0))
    lines = [f"P2\n{width} {height}\n255"]
    for row in img:
        lines.append(" ".join(str(int(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
