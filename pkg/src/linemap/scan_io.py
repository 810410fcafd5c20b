"""Log, trajectory, map-file and SVG input/output.

Laser logs use the CARMEN text format; only FLASER records are consumed:

    FLASER n r_1 ... r_n x y theta odom_x odom_y odom_theta ts host log_ts

Trajectories are whitespace tables of `scan_index x y theta` with '#'
comment lines. Map files start with a `linemap v1` header, carry metadata
in '#' key=value lines, and one `index x1 y1 x2 y2 weight` record per
segment with six-decimal coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .geometry import LineSegment, Point, Pose2D

DEFAULT_MAX_RANGE = 80.0

MAP_HEADER = "linemap v1"


class MalformedLogError(ValueError):
    """A log, trajectory or map file violated its grammar; message names the line."""


@dataclass(frozen=True, eq=False)
class LaserScan:
    """One range scan. Beam i points at angle_min + i * angle_increment.

    ranges holds raw meters; readings <= 0 or >= max_range are invalid
    (max-range returns are "no hit" by convention).
    """

    scan_index: int
    ranges: tuple[float, ...]
    angle_min: float
    angle_increment: float
    max_range: float = DEFAULT_MAX_RANGE
    odometry: Pose2D | None = None

    def __post_init__(self) -> None:
        if len(self.ranges) == 0:
            raise ValueError("scan must contain at least one range")
        if self.angle_increment <= 0.0:
            raise ValueError(f"angle_increment must be positive, got {self.angle_increment!r}")

    def beam_angle(self, i: int) -> float:
        return self.angle_min + i * self.angle_increment

    def is_valid(self, r: float) -> bool:
        return math.isfinite(r) and 0.0 < r < self.max_range

    def valid_count(self) -> int:
        return sum(1 for r in self.ranges if self.is_valid(r))


@dataclass(frozen=True)
class Trajectory:
    """Poses keyed by scan index; indices strictly increase."""

    entries: tuple[tuple[int, Pose2D], ...]
    _lookup: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        last = None
        for idx, _pose in self.entries:
            if last is not None and idx <= last:
                raise ValueError(f"scan indices must strictly increase, got {idx} after {last}")
            last = idx
        object.__setattr__(self, "_lookup", {idx: pose for idx, pose in self.entries})

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, Pose2D]]) -> "Trajectory":
        return cls(entries=tuple(pairs))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[tuple[int, Pose2D]]:
        return iter(self.entries)

    def __contains__(self, scan_index: int) -> bool:
        return scan_index in self._lookup

    def pose_for(self, scan_index: int) -> Pose2D:
        try:
            return self._lookup[scan_index]
        except KeyError:
            raise KeyError(f"no pose for scan index {scan_index}") from None

    def scan_indices(self) -> list[int]:
        return [idx for idx, _ in self.entries]


@dataclass
class SegmentMap:
    """Final map snapshot: segments keyed by their map index, plus metadata."""

    segments: dict[int, LineSegment] = field(default_factory=dict)
    metadata: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.segments)

    def ordered(self) -> list[tuple[int, LineSegment]]:
        return sorted(self.segments.items())


def parse_carmen_log(
    lines: Iterable[str], max_range: float = DEFAULT_MAX_RANGE
) -> list[LaserScan]:
    """Parse FLASER records in file order; other record types are skipped.

    Scan indices are assigned sequentially from 0. Errors name the
    offending 1-based line number.
    """
    scans: list[LaserScan] = []
    for lineno, raw in enumerate(lines, start=1):
        tokens = raw.split()
        if not tokens or tokens[0] != "FLASER":
            continue
        try:
            n = int(tokens[1])
        except (IndexError, ValueError):
            raise MalformedLogError(f"line {lineno}: FLASER needs an integer beam count")
        if n < 2:
            raise MalformedLogError(f"line {lineno}: FLASER needs at least 2 beams, got {n}")
        if len(tokens) != n + 11:
            raise MalformedLogError(
                f"line {lineno}: FLASER with {n} beams needs {n + 11} tokens, got {len(tokens)}"
            )
        try:
            values = [float(t) for t in tokens[2 : n + 8]]
        except ValueError as exc:
            raise MalformedLogError(f"line {lineno}: non-numeric field ({exc})")
        ranges = tuple(values[:n])
        x, y, theta = values[n : n + 3]
        scans.append(
            LaserScan(
                scan_index=len(scans),
                ranges=ranges,
                angle_min=-math.pi / 2.0,
                angle_increment=math.pi / (n - 1),
                max_range=max_range,
                odometry=Pose2D(x, y, theta),
            )
        )
    return scans


def read_carmen_log(path: str | Path, max_range: float = DEFAULT_MAX_RANGE) -> list[LaserScan]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_carmen_log(fh, max_range=max_range)


def dump_carmen_log(scans: Sequence[LaserScan]) -> str:
    """Write scans back out as FLASER records (odometry pose duplicated)."""
    out = []
    for scan in scans:
        pose = scan.odometry or Pose2D(0.0, 0.0, 0.0)
        fields = ["FLASER", str(len(scan.ranges))]
        fields.extend(f"{r:.4f}" for r in scan.ranges)
        for p in (pose, pose):
            fields.extend((f"{p.x:.6f}", f"{p.y:.6f}", f"{p.theta:.6f}"))
        fields.extend((f"{float(scan.scan_index):.6f}", "synth", f"{float(scan.scan_index):.6f}"))
        out.append(" ".join(fields))
    return "\n".join(out) + "\n" if out else ""


def parse_trajectory(lines: Iterable[str]) -> Trajectory:
    """Parse `scan_index x y theta` rows; '#' lines and blank lines are skipped."""
    pairs: list[tuple[int, Pose2D]] = []
    last: int | None = None
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        tokens = stripped.split()
        if len(tokens) != 4:
            raise MalformedLogError(f"line {lineno}: expected 4 fields, got {len(tokens)}")
        try:
            idx = int(tokens[0])
            x, y, theta = (float(t) for t in tokens[1:])
        except ValueError as exc:
            raise MalformedLogError(f"line {lineno}: bad trajectory row ({exc})")
        if last is not None and idx <= last:
            raise MalformedLogError(
                f"line {lineno}: scan index {idx} does not increase over {last}"
            )
        last = idx
        pairs.append((idx, Pose2D(x, y, theta)))
    return Trajectory.from_pairs(pairs)


def read_trajectory(path: str | Path) -> Trajectory:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_trajectory(fh)


def dump_trajectory(trajectory: Trajectory) -> str:
    rows = [f"{idx} {pose.x!r} {pose.y!r} {pose.theta!r}" for idx, pose in trajectory]
    return "\n".join(rows) + "\n" if rows else ""


def write_trajectory(trajectory: Trajectory, path: str | Path) -> None:
    Path(path).write_text(dump_trajectory(trajectory), encoding="utf-8")


def parse_segment_map(lines: Iterable[str]) -> SegmentMap:
    """Parse a `linemap v1` map file."""
    smap = SegmentMap()
    it = iter(lines)
    try:
        header = next(it).strip()
    except StopIteration:
        raise MalformedLogError("line 1: empty map file")
    if header != MAP_HEADER:
        raise MalformedLogError(f"line 1: expected header {MAP_HEADER!r}, got {header!r}")
    for lineno, raw in enumerate(it, start=2):
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped[1:].strip()
            if "=" in body:
                key, value = body.split("=", 1)
                smap.metadata[key.strip()] = value.strip()
            continue
        tokens = stripped.split()
        if len(tokens) != 6:
            raise MalformedLogError(f"line {lineno}: expected 6 fields, got {len(tokens)}")
        try:
            idx = int(tokens[0])
            x1, y1, x2, y2 = (float(t) for t in tokens[1:5])
            weight = int(tokens[5])
        except ValueError as exc:
            raise MalformedLogError(f"line {lineno}: bad map record ({exc})")
        if idx in smap.segments:
            raise MalformedLogError(f"line {lineno}: duplicate map index {idx}")
        try:
            seg = LineSegment(Point(x1, y1), Point(x2, y2), weight=weight, index=idx)
        except ValueError as exc:
            raise MalformedLogError(f"line {lineno}: {exc}")
        smap.segments[idx] = seg
    return smap


def read_segment_map(path: str | Path) -> SegmentMap:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_segment_map(fh)


def dump_segment_map(smap: SegmentMap) -> str:
    """Serialize with sorted indices and sorted metadata keys (deterministic)."""
    out = [MAP_HEADER]
    for key in sorted(smap.metadata):
        out.append(f"# {key}={smap.metadata[key]}")
    for idx, seg in smap.ordered():
        out.append(
            f"{idx} {seg.start.x:.6f} {seg.start.y:.6f} "
            f"{seg.end.x:.6f} {seg.end.y:.6f} {seg.weight}"
        )
    return "\n".join(out) + "\n"


def write_segment_map(smap: SegmentMap, path: str | Path) -> None:
    Path(path).write_text(dump_segment_map(smap), encoding="utf-8")


def export_svg(
    smap: SegmentMap,
    scan_points: Sequence[tuple[float, float]] | None = None,
    pixels_per_meter: float = 20.0,
    header_lines: Sequence[str] = (),
) -> str:
    """Render the map (and optionally registered scan points) as an SVG string.

    World y grows upward, SVG y grows downward, so y is flipped. Segments
    are blue strokes with a red circle at the start endpoint and a green
    circle at the end endpoint; scan points are drawn beneath the segments.
    header_lines are embedded as XML comments for provenance.
    """
    if pixels_per_meter <= 0:
        raise ValueError("pixels_per_meter must be positive")
    pts: list[tuple[float, float]] = list(scan_points or [])
    xs: list[float] = []
    ys: list[float] = []
    for _idx, seg in smap.segments.items():
        xs.extend((seg.start.x, seg.end.x))
        ys.extend((seg.start.y, seg.end.y))
    for x, y in pts:
        xs.append(x)
        ys.append(y)
    if xs:
        margin = 1.0
        min_x, max_x = min(xs) - margin, max(xs) + margin
        min_y, max_y = min(ys) - margin, max(ys) + margin
    else:
        min_x, max_x, min_y, max_y = 0.0, 1.0, 0.0, 1.0
    scale = pixels_per_meter
    width = max(1, math.ceil((max_x - min_x) * scale))
    height = max(1, math.ceil((max_y - min_y) * scale))

    def to_px(x: float, y: float) -> tuple[float, float]:
        return ((x - min_x) * scale, (max_y - y) * scale)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    for line in header_lines:
        parts.append(f"<!-- {line.replace('--', '- -')} -->")
    parts.append(f'<rect width="{width}" height="{height}" fill="white"/>')
    for x, y in pts:
        px, py = to_px(x, y)
        parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="1" fill="#88bb88"/>')
    for _idx, seg in smap.ordered():
        x1, y1 = to_px(seg.start.x, seg.start.y)
        x2, y2 = to_px(seg.end.x, seg.end.y)
        parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="#2255cc" stroke-width="2"/>'
        )
        parts.append(f'<circle cx="{x1:.2f}" cy="{y1:.2f}" r="3" fill="red"/>')
        parts.append(f'<circle cx="{x2:.2f}" cy="{y2:.2f}" r="3" fill="green"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(
    smap: SegmentMap,
    path: str | Path,
    scan_points: Sequence[tuple[float, float]] | None = None,
    pixels_per_meter: float = 20.0,
    header_lines: Sequence[str] = (),
) -> None:
    Path(path).write_text(
        export_svg(
            smap,
            scan_points=scan_points,
            pixels_per_meter=pixels_per_meter,
            header_lines=header_lines,
        ),
        encoding="utf-8",
    )
