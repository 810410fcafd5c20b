"""Replay orchestration: keyframing, extraction, merging, adjustment, timing.

The merge pipeline consumes a scan log plus a trajectory of interim poses,
keyframes the posed scans, extracts segments and feeds the chosen merger.
An optimized trajectory can be applied at explicit scan-index markers
(after which subsequent poses come from it) or once after the replay.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Mapping, Sequence

from .baselines import OneToOneMapper
from .config import Config
from .extraction import extract_segments
from .geometry import Pose2D, norm_angle
from .mapper import LineSegmentMapper
from .scan_io import LaserScan, Trajectory

if TYPE_CHECKING:
    from .evaluation import ErrorReport, QualityReport
    from .mapper import OriginalSegment
    from .scan_io import SegmentMap

MERGERS = ("cae", "oto", "o2to")


@dataclass
class MergeRunResult:
    mapper: LineSegmentMapper
    merger: str
    processed: int  # scans merged after keyframing
    skipped_no_pose: int
    skipped_keyframe: int
    segments_extracted: int
    merge_seconds: list[float] = field(default_factory=list)
    adjust_seconds: list[float] = field(default_factory=list)

    @property
    def mean_merge_seconds(self) -> float:
        return sum(self.merge_seconds) / len(self.merge_seconds) if self.merge_seconds else 0.0

    @property
    def total_merge_seconds(self) -> float:
        return sum(self.merge_seconds)


class KeyframeFilter:
    """Keep a scan when the pose moved or turned enough since the last kept one."""

    def __init__(self, translation: float, rotation: float):
        self.translation = translation
        self.rotation = rotation
        self._last: Pose2D | None = None

    def keep(self, pose: Pose2D) -> bool:
        last = self._last
        if last is None:
            self._last = pose
            return True
        moved = math.hypot(pose.x - last.x, pose.y - last.y)
        turned = abs(norm_angle(pose.theta - last.theta))
        if moved > self.translation or turned > self.rotation:
            self._last = pose
            return True
        return False


def run_merge(
    scans: Sequence[LaserScan],
    trajectory: Trajectory,
    config: Config,
    merger: str = "cae",
    optimized_trajectory: Trajectory | None = None,
    adjust_at: Sequence[int] = (),
) -> MergeRunResult:
    """Replay a log through a merger.

    merger: "cae" (one-to-many, adjustable), "oto" (online one-to-one, no
    adjustment), "o2to" (one-to-one over final poses, no adjustment; pass
    the final trajectory as `trajectory`).
    """
    if merger not in MERGERS:
        raise ValueError(f"unknown merger {merger!r}, expected one of {MERGERS}")
    if merger != "cae" and (optimized_trajectory is not None or adjust_at):
        raise ValueError(f"merger {merger!r} does not support adjustment")
    if adjust_at and optimized_trajectory is None:
        raise ValueError("adjust_at markers need an optimized trajectory")

    thresholds = config.fusion_thresholds()
    params = config.extraction_params()
    mapper: LineSegmentMapper
    if merger == "cae":
        mapper = LineSegmentMapper(thresholds)
    else:
        mapper = OneToOneMapper(thresholds)

    keyframe = KeyframeFilter(
        translation=float(config.get("keyframe.translation_m")),
        rotation=math.radians(float(config.get("keyframe.rotation_deg"))),
    )
    result = MergeRunResult(
        mapper=mapper,
        merger=merger,
        processed=0,
        skipped_no_pose=0,
        skipped_keyframe=0,
        segments_extracted=0,
    )

    markers = sorted(set(adjust_at))
    active = trajectory
    for scan in scans:
        if scan.scan_index not in active:
            result.skipped_no_pose += 1
            continue
        pose = active.pose_for(scan.scan_index)
        if not keyframe.keep(pose):
            result.skipped_keyframe += 1
            continue
        segments = extract_segments(scan, params)
        result.segments_extracted += len(segments)
        t0 = time.perf_counter()
        mapper.integrate_scan(segments, pose, scan.scan_index)
        result.merge_seconds.append(time.perf_counter() - t0)
        result.processed += 1

        while markers and scan.scan_index >= markers[0]:
            markers.pop(0)
            assert optimized_trajectory is not None
            t0 = time.perf_counter()
            mapper.adjust(optimized_trajectory, workers=int(config.get("mapper.adjust_workers")))
            result.adjust_seconds.append(time.perf_counter() - t0)
            active = optimized_trajectory

    if optimized_trajectory is not None and not adjust_at:
        t0 = time.perf_counter()
        mapper.adjust(optimized_trajectory, workers=int(config.get("mapper.adjust_workers")))
        result.adjust_seconds.append(time.perf_counter() - t0)

    return result


@dataclass
class EvaluationResult:
    quality: "QualityReport"
    error: "ErrorReport | None"
    distance: float | None
    table_cells: int
    registered_points: int
    warnings: list[str] = field(default_factory=list)

    def record_lines(self) -> list[str]:
        """Deterministic key=value lines (no runtimes)."""
        lines = [
            f"quality.q={self.quality.q!r}",
            f"quality.normalized_percent={self.quality.normalized_percent!r}",
            f"quality.total_pixels={self.quality.total_pixels}",
            f"quality.redundant_pixels={self.quality.redundant_pixels}",
            f"quality.redundant_pairs={len(self.quality.pairs)}",
            f"quality.lambda={self.quality.lam!r}",
            f"table.cells={self.table_cells}",
            f"table.points={self.registered_points}",
        ]
        for a, b in self.quality.pairs:
            lines.append(f"quality.pair={a},{b}")
        if self.error is not None:
            lines.append(f"error.e={self.error.e!r}")
            lines.append(f"error.originals={self.error.total_originals}")
        if self.distance is not None:
            lines.append(f"distance.value={self.distance!r}")
        return lines


def run_evaluation(
    smap: "SegmentMap",
    scans: Sequence[LaserScan],
    trajectory: Trajectory,
    config: Config,
    correspondences: "Mapping[int, Sequence[OriginalSegment]] | None" = None,
) -> EvaluationResult:
    """Score a map against the scans registered under the given trajectory.

    Scans without a pose are ignored for table construction. Error and
    distance metrics are computed only when correspondences are supplied.
    """
    from .evaluation import (
        build_lookup_table,
        distance_metric,
        error_metric,
        map_quality,
    )

    posed = [s for s in scans if s.scan_index in trajectory]
    table = build_lookup_table(
        posed,
        trajectory,
        resolution=float(config.get("eval.resolution_m")),
        sigma=float(config.get("eval.sigma_m")),
    )
    warnings: list[str] = []
    if smap.segments and table.cells:
        seg_xs = [p for _i, s in smap.ordered() for p in (s.start.x, s.end.x)]
        seg_ys = [p for _i, s in smap.ordered() for p in (s.start.y, s.end.y)]
        res = table.geometry.resolution
        cell_is = [c[0] for c in table.cells]
        cell_js = [c[1] for c in table.cells]
        disjoint_x = max(seg_xs) < min(cell_is) * res or min(seg_xs) > (max(cell_is) + 1) * res
        disjoint_y = max(seg_ys) < min(cell_js) * res or min(seg_ys) > (max(cell_js) + 1) * res
        if disjoint_x or disjoint_y:
            warnings.append(
                "map bounding box is disjoint from the registered scan points; "
                "map and trajectory are probably in different frames"
            )
    quality = map_quality(
        smap,
        table,
        config.fusion_thresholds(),
        lam=float(config.get("eval.lambda")),
        superposition_fraction=float(config.get("eval.superposition_fraction")),
        bin_deg=float(config.get("eval.angle_bin_deg")),
    )
    error = None
    distance = None
    if correspondences is not None:
        error = error_metric(smap, correspondences, trajectory)
        distance = distance_metric(
            smap,
            correspondences,
            trajectory,
            w_dist=float(config.get("eval.w_dist")),
            w_ang=float(config.get("eval.w_ang")),
        )
    n_points = sum(s.valid_count() for s in posed)
    return EvaluationResult(
        quality=quality,
        error=error,
        distance=distance,
        table_cells=len(table.cells),
        registered_points=n_points,
        warnings=warnings,
    )
