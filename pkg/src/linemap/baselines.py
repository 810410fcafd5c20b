"""Baseline mergers: one-to-one association, online and offline.

The one-to-one variants share all bookkeeping with the one-to-many mapper
and differ only in association: a candidate merges with at most one map
segment, the full-condition match with the smallest separation distance
(ties broken toward the smaller map index). The offline variant is simply
the one-to-one merger replayed against final optimized poses with no
adjustment step.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .fusion import FusionThresholds, satisfies_fusion_conditions, separation_distance
from .geometry import LineSegment, Pose2D
from .mapper import LineSegmentMapper


class OneToOneMapper(LineSegmentMapper):
    """Online merger that fuses each new segment with at most one map segment."""

    def _associate(self, candidate: LineSegment) -> list[int]:
        best_idx: int | None = None
        best_d = 0.0
        for idx, seg in sorted(self.segments.items()):
            if not satisfies_fusion_conditions(seg, candidate, self.thresholds, self.counters):
                continue
            d = separation_distance(seg, candidate)
            if best_idx is None or d < best_d:
                best_idx = idx
                best_d = d
        return [] if best_idx is None else [best_idx]


def run_offline_one_to_one(
    frames: Iterable[tuple[int, Pose2D, Sequence[LineSegment]]],
    thresholds: FusionThresholds,
) -> OneToOneMapper:
    """Replay (scan_index, final_pose, local_segments) frames through the
    one-to-one merger. Poses must already be globally optimized; there is no
    adjustment afterwards."""
    mapper = OneToOneMapper(thresholds)
    for scan_index, pose, local_segments in frames:
        mapper.integrate_scan(local_segments, pose, scan_index)
    return mapper
