"""Incremental one-to-many line segment map with global adjustment.

Every extracted segment entering the map is remembered in its local sensor
frame together with the scan it came from (an "original"). The map keeps,
per map index, the fused segment and the subset of originals it absorbed.
When a globally optimized trajectory arrives, each subset is independently
re-transformed and re-merged, which rebuilds the map without touching the
index structure; merging then simply continues on the adjusted map.

The fused segment is defined as the weighted merge of the whole subset,
not of whatever intermediate segments happened to exist when an update
arrived. Running sums (centers, headings relative to the subset's first
original, all endpoints) make that definition incrementally maintainable,
so re-adjusting with the very poses the map was built under reproduces the
map to floating-point noise instead of shifting endpoints by iterated
projections.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .fusion import (
    FusionThresholds,
    GateCounters,
    merge_segments,
    satisfies_fusion_conditions,
    separation_distance,
)
from .geometry import LineSegment, Point, Pose2D, norm_angle, transform_to_global
from .scan_io import MalformedLogError, SegmentMap, Trajectory


class MapInvariantError(AssertionError):
    """A bookkeeping invariant of the map store was violated."""


@dataclass(frozen=True)
class OriginalSegment:
    """An extracted segment in its local sensor frame, tied to the scan's pose index.

    seq is a process-wide insertion counter used for canonical ordering and
    disjointness checks; it never influences geometry.
    """

    segment: LineSegment
    pose_index: int
    seq: int


@dataclass(frozen=True)
class MapStatistics:
    count: int
    min_length: float | None
    max_length: float | None
    mean_length: float | None


def map_statistics(smap: SegmentMap) -> MapStatistics:
    lengths = [seg.length for _idx, seg in smap.ordered()]
    if not lengths:
        return MapStatistics(count=0, min_length=None, max_length=None, mean_length=None)
    return MapStatistics(
        count=len(lengths),
        min_length=min(lengths),
        max_length=max(lengths),
        mean_length=sum(lengths) / len(lengths),
    )


class _SubsetState:
    """One map segment's originals plus the running sums of their fusion.

    The sums mirror the arithmetic of merge_segments over the subset sorted
    by (pose_index, seq): center coordinate sums, heading deviations summed
    relative to the first (lowest-key) member, and every global endpoint in
    a growable array for the extreme-projection step. New members always
    carry a larger key than the reference, so the reference only changes
    when subsets coalesce, which re-bases the heading sum exactly.
    """

    __slots__ = ("originals", "n", "cx_sum", "cy_sum", "ref_key", "ref_theta",
                 "rel_sum", "points", "count", "single")

    def __init__(self, original: OriginalSegment, global_seg: LineSegment):
        c = global_seg.center
        self.originals = [original]
        self.n = 1
        self.cx_sum = c.x
        self.cy_sum = c.y
        self.ref_key = (original.pose_index, original.seq)
        self.ref_theta = global_seg.heading
        self.rel_sum = 0.0
        self.points = np.empty((8, 2), dtype=np.float64)
        self.count = 0
        self._push(global_seg)
        self.single = global_seg

    def _push(self, seg: LineSegment) -> None:
        if self.count + 2 > len(self.points):
            grown = np.empty((len(self.points) * 2, 2), dtype=np.float64)
            grown[: self.count] = self.points[: self.count]
            self.points = grown
        self.points[self.count, 0] = seg.start.x
        self.points[self.count, 1] = seg.start.y
        self.points[self.count + 1, 0] = seg.end.x
        self.points[self.count + 1, 1] = seg.end.y
        self.count += 2

    def add(self, original: OriginalSegment, global_seg: LineSegment) -> None:
        c = global_seg.center
        self.cx_sum += c.x
        self.cy_sum += c.y
        rel = norm_angle(global_seg.heading - self.ref_theta)
        assert abs(rel) <= math.pi / 2, "merge inputs must be near-parallel"
        self.rel_sum += rel
        self.n += 1
        self._push(global_seg)
        self.originals.append(original)

    def absorb(self, other: "_SubsetState") -> None:
        """Coalesce another subset into this one (one-to-many association)."""
        if other.ref_key < self.ref_key:
            shift = norm_angle(self.ref_theta - other.ref_theta)
            assert abs(shift) <= math.pi / 2, "merge inputs must be near-parallel"
            self.rel_sum = other.rel_sum + self.rel_sum + self.n * shift
            self.ref_key = other.ref_key
            self.ref_theta = other.ref_theta
        else:
            shift = norm_angle(other.ref_theta - self.ref_theta)
            assert abs(shift) <= math.pi / 2, "merge inputs must be near-parallel"
            self.rel_sum += other.rel_sum + other.n * shift
        self.cx_sum += other.cx_sum
        self.cy_sum += other.cy_sum
        needed = self.count + other.count
        if needed > len(self.points):
            capacity = len(self.points)
            while capacity < needed:
                capacity *= 2
            grown = np.empty((capacity, 2), dtype=np.float64)
            grown[: self.count] = self.points[: self.count]
            self.points = grown
        self.points[self.count : needed] = other.points[: other.count]
        self.count = needed
        self.n += other.n
        self.originals.extend(other.originals)

    def fused_segment(self, index: int) -> LineSegment:
        """The merge of the whole subset, identical to merge_segments over it."""
        if self.n == 1:
            return replace(self.single, index=index)
        inv = 1.0 / self.n
        cx = self.cx_sum * inv
        cy = self.cy_sum * inv
        theta = norm_angle(self.ref_theta + self.rel_sum * inv)
        ux = math.cos(theta)
        uy = math.sin(theta)
        pts = self.points[: self.count]
        t = (pts[:, 0] - cx) * ux + (pts[:, 1] - cy) * uy
        t_min = float(t.min())
        t_max = float(t.max())
        if t_max <= t_min:
            raise ValueError("merged segment collapses to a point")
        start = Point(cx + ux * t_min, cy + uy * t_min)
        end = Point(cx + ux * t_max, cy + uy * t_max)
        return LineSegment(start=start, end=end, weight=self.n, index=index)

    @classmethod
    def from_parts(
        cls, ordered: Sequence[OriginalSegment], parts: Sequence[LineSegment]
    ) -> "_SubsetState":
        state = cls(ordered[0], parts[0])
        for original, seg in zip(ordered[1:], parts[1:]):
            state.add(original, seg)
        return state


class LineSegmentMapper:
    """Online map builder: one-to-many association, min-index insertion.

    Not thread safe; callers serialize access (the service wraps sessions
    in a lock).
    """

    def __init__(self, thresholds: FusionThresholds):
        self.thresholds = thresholds
        self.segments: dict[int, LineSegment] = {}
        self._subsets: dict[int, _SubsetState] = {}
        self.last_index = 0
        self.total_originals = 0
        self.counters = GateCounters()
        self._next_seq = 0

    @property
    def subsets(self) -> dict[int, list[OriginalSegment]]:
        """Read-only view: map index -> originals absorbed by that segment."""
        return {idx: state.originals for idx, state in self._subsets.items()}

    def _associate(self, candidate: LineSegment) -> list[int]:
        """Indices of all map segments the candidate fuses with."""
        matches = []
        for idx, seg in self.segments.items():
            if satisfies_fusion_conditions(seg, candidate, self.thresholds, self.counters):
                matches.append(idx)
        return matches

    def integrate_scan(
        self, local_segments: Sequence[LineSegment], pose: Pose2D, scan_index: int
    ) -> None:
        """Merge one scan's extracted segments (local frame) into the map."""
        for local in local_segments:
            if local.weight != 1:
                local = replace(local, weight=1)
            candidate = transform_to_global(local, pose)
            original = OriginalSegment(segment=local, pose_index=scan_index, seq=self._next_seq)
            self._next_seq += 1
            self.total_originals += 1

            matches = self._associate(candidate)
            if not matches:
                idx = self.last_index
                self.last_index += 1
                self.segments[idx] = replace(candidate, index=idx)
                self._subsets[idx] = _SubsetState(original, candidate)
                continue

            matches.sort()
            target = matches[0]
            state = self._subsets[target]
            for i in matches[1:]:
                del self.segments[i]
                state.absorb(self._subsets.pop(i))
            state.add(original, candidate)
            self.segments[target] = state.fused_segment(target)

    @staticmethod
    def _readjust_subset(
        subset: Sequence[OriginalSegment], trajectory: Trajectory, index: int
    ) -> tuple[LineSegment, _SubsetState]:
        ordered = sorted(subset, key=lambda o: (o.pose_index, o.seq))
        parts = []
        for original in ordered:
            try:
                pose = trajectory.pose_for(original.pose_index)
            except KeyError:
                raise KeyError(
                    f"map index {index}: no pose for scan index {original.pose_index}"
                ) from None
            parts.append(transform_to_global(original.segment, pose))
        merged = merge_segments(parts)
        return replace(merged, index=index), _SubsetState.from_parts(ordered, parts)

    def adjust(self, trajectory: Trajectory, workers: int = 0) -> None:
        """Rebuild every map segment from its originals under new poses.

        workers=0 runs serially; any positive count uses a thread pool.
        Results are independent of the worker count, and the map is only
        replaced after every subset succeeded (an unresolved pose index
        raises and leaves the map untouched).
        """
        items = sorted(self._subsets.items())
        if workers < 0:
            raise ValueError(f"workers must be >= 0, got {workers}")
        if workers == 0 or len(items) <= 1:
            rebuilt = {
                idx: self._readjust_subset(state.originals, trajectory, idx)
                for idx, state in items
            }
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = pool.map(
                    lambda item: (
                        item[0],
                        self._readjust_subset(item[1].originals, trajectory, item[0]),
                    ),
                    items,
                )
                rebuilt = dict(results)
        self.segments = {idx: seg for idx, (seg, _state) in rebuilt.items()}
        self._subsets = {idx: state for idx, (_seg, state) in rebuilt.items()}

    def adjustment_diagnostics(self, trajectory: Trajectory) -> list[int]:
        """Map indices whose re-transformed originals no longer pairwise satisfy
        the separation gate; useful for spotting bad loop closures."""
        suspicious = []
        for idx, state in sorted(self._subsets.items()):
            transformed = [
                transform_to_global(o.segment, trajectory.pose_for(o.pose_index))
                for o in state.originals
            ]
            flagged = False
            for i in range(len(transformed)):
                for j in range(i + 1, len(transformed)):
                    if (
                        separation_distance(transformed[i], transformed[j])
                        > self.thresholds.d_max
                    ):
                        flagged = True
                        break
                if flagged:
                    break
            if flagged:
                suspicious.append(idx)
        return suspicious

    def snapshot(self, metadata: Mapping[str, str] | None = None) -> SegmentMap:
        return SegmentMap(
            segments={idx: seg for idx, seg in self.segments.items()},
            metadata=dict(metadata or {}),
        )

    def filter_by_weight(
        self, min_updates: int, metadata: Mapping[str, str] | None = None
    ) -> SegmentMap:
        """Snapshot keeping only segments updated more than min_updates times."""
        return SegmentMap(
            segments={idx: seg for idx, seg in self.segments.items() if seg.weight > min_updates},
            metadata=dict(metadata or {}),
        )

    def statistics(self) -> MapStatistics:
        return map_statistics(self.snapshot())

    def check_invariants(self) -> None:
        """Validate the bookkeeping; raises MapInvariantError on any breach."""
        if set(self.segments) != set(self._subsets):
            raise MapInvariantError("segment and subset key sets differ")
        seen_seqs: set[int] = set()
        count = 0
        for idx, seg in self.segments.items():
            state = self._subsets[idx]
            subset = state.originals
            if not subset:
                raise MapInvariantError(f"map index {idx} has an empty subset")
            if state.n != len(subset) or state.count != 2 * state.n:
                raise MapInvariantError(f"map index {idx}: running sums out of step")
            if seg.weight != len(subset):
                raise MapInvariantError(
                    f"map index {idx}: weight {seg.weight} != subset size {len(subset)}"
                )
            if seg.index != idx:
                raise MapInvariantError(f"map index {idx}: segment carries index {seg.index}")
            for original in subset:
                if original.seq in seen_seqs:
                    raise MapInvariantError(
                        f"original seq {original.seq} appears in more than one subset"
                    )
                seen_seqs.add(original.seq)
                if original.segment.weight != 1:
                    raise MapInvariantError("stored originals must have weight 1")
            count += len(subset)
        if count != self.total_originals:
            raise MapInvariantError(
                f"subset union holds {count} originals, expected {self.total_originals}"
            )
        if self.segments and self.last_index <= max(self.segments):
            raise MapInvariantError("last_index must exceed every live map index")


def dump_correspondences(mapper: LineSegmentMapper) -> str:
    """Serialize the per-index original subsets (local frames + pose indices)."""
    out = ["linemap-correspondences v1"]
    subsets = mapper.subsets
    for idx in sorted(subsets):
        for original in sorted(subsets[idx], key=lambda o: (o.pose_index, o.seq)):
            seg = original.segment
            out.append(
                f"{idx} {original.pose_index} "
                f"{seg.start.x:.6f} {seg.start.y:.6f} {seg.end.x:.6f} {seg.end.y:.6f}"
            )
    return "\n".join(out) + "\n"


def parse_correspondences(lines: Iterable[str]) -> dict[int, list[OriginalSegment]]:
    it = iter(lines)
    try:
        header = next(it).strip()
    except StopIteration:
        raise MalformedLogError("line 1: empty correspondence file")
    if header != "linemap-correspondences v1":
        raise MalformedLogError(f"line 1: unexpected header {header!r}")
    subsets: dict[int, list[OriginalSegment]] = {}
    seq = 0
    for lineno, raw in enumerate(it, start=2):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if len(tokens) != 6:
            raise MalformedLogError(f"line {lineno}: expected 6 fields, got {len(tokens)}")
        try:
            idx = int(tokens[0])
            pose_index = int(tokens[1])
            x1, y1, x2, y2 = (float(t) for t in tokens[2:])
        except ValueError as exc:
            raise MalformedLogError(f"line {lineno}: bad correspondence row ({exc})")
        seg = LineSegment(Point(x1, y1), Point(x2, y2), weight=1)
        subsets.setdefault(idx, []).append(
            OriginalSegment(segment=seg, pose_index=pose_index, seq=seq)
        )
        seq += 1
    return subsets
