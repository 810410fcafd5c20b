"""Planar primitives for line segment maps.

Angles are radians in (-pi, pi], distances are meters. Line segments are
directed (start -> end) and carry an integer weight counting how many
extracted segments have been fused into them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property

TWO_PI = math.tau


class DegenerateSegmentError(ValueError):
    """Raised when a zero-length segment is constructed or produced."""


def norm_angle(angle: float) -> float:
    """Wrap an angle into (-pi, pi].

    Uses IEEE remainder, which lands in [-pi, pi]; the single boundary
    case -pi is folded to +pi so the interval is half-open on the left.
    """
    if not math.isfinite(angle):
        raise ValueError(f"angle must be finite, got {angle!r}")
    wrapped = math.remainder(angle, TWO_PI)
    if wrapped <= -math.pi:
        wrapped += TWO_PI
    return wrapped


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", _require_finite("x", self.x))
        object.__setattr__(self, "y", _require_finite("y", self.y))

    def distance_to(self, other: "Point") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Pose2D:
    """Robot pose; theta is normalized on construction."""

    x: float
    y: float
    theta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", _require_finite("x", self.x))
        object.__setattr__(self, "y", _require_finite("y", self.y))
        object.__setattr__(self, "theta", norm_angle(_require_finite("theta", self.theta)))

    def transform_point(self, p: Point) -> Point:
        """Map a point from this pose's local frame into the world frame."""
        c = math.cos(self.theta)
        s = math.sin(self.theta)
        return Point(self.x + c * p.x - s * p.y, self.y + s * p.x + c * p.y)


@dataclass(frozen=True)
class GeneralLineForm:
    """Line as a*x + b*y + c = 0 with the normal (a, b) normalized to unit length."""

    a: float
    b: float
    c: float

    def __post_init__(self) -> None:
        norm = self.a * self.a + self.b * self.b
        if not math.isfinite(norm) or abs(norm - 1.0) > 1e-9:
            raise ValueError(f"line normal must be unit length, got a^2+b^2={norm!r}")

    def distance_to(self, p: Point) -> float:
        """Perpendicular distance from a point to the line."""
        return abs(self.a * p.x + self.b * p.y + self.c)


@dataclass(frozen=True, eq=False)
class LineSegment:
    """Directed weighted segment. Derived values are cached; instances are immutable."""

    start: Point
    end: Point
    weight: int = 1
    index: int | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.weight, int) or self.weight < 1:
            raise ValueError(f"weight must be a positive integer, got {self.weight!r}")
        if self.start.x == self.end.x and self.start.y == self.end.y:
            raise DegenerateSegmentError(
                f"segment endpoints coincide at ({self.start.x}, {self.start.y})"
            )

    @cached_property
    def length(self) -> float:
        return self.start.distance_to(self.end)

    @cached_property
    def heading(self) -> float:
        """Direction angle of the segment, start -> end, in (-pi, pi]."""
        return math.atan2(self.end.y - self.start.y, self.end.x - self.start.x)

    @cached_property
    def center(self) -> Point:
        return Point((self.start.x + self.end.x) / 2.0, (self.start.y + self.end.y) / 2.0)

    @cached_property
    def direction(self) -> tuple[float, float]:
        """Unit vector start -> end."""
        inv = 1.0 / self.length
        return ((self.end.x - self.start.x) * inv, (self.end.y - self.start.y) * inv)

    @cached_property
    def general_form(self) -> GeneralLineForm:
        """Supporting line; normal is the segment direction rotated -90 degrees.

        For a segment along +x the normal points along -y, i.e.
        a = -dy/L, b = dx/L, c chosen so both endpoints satisfy the equation.
        """
        ux, uy = self.direction
        a = -uy
        b = ux
        c = -(a * self.start.x + b * self.start.y)
        return GeneralLineForm(a, b, c)

    def reversed(self) -> "LineSegment":
        return replace(self, start=self.end, end=self.start)

    def point_at(self, t: float) -> Point:
        """Point at signed abscissa t along the direction, measured from start."""
        ux, uy = self.direction
        return Point(self.start.x + ux * t, self.start.y + uy * t)

    def project_abscissa(self, p: Point) -> float:
        """Signed distance of p's foot point along the segment direction from start."""
        ux, uy = self.direction
        return (p.x - self.start.x) * ux + (p.y - self.start.y) * uy


def point_to_line_distance(p: Point, line: GeneralLineForm) -> float:
    return line.distance_to(p)


def project_point_onto_segment_line(p: Point, segment: LineSegment) -> Point:
    """Foot of the perpendicular from p onto the segment's supporting line."""
    return segment.point_at(segment.project_abscissa(p))


def transform_to_global(segment: LineSegment, pose: Pose2D) -> LineSegment:
    """Rigidly transform a segment from the pose's local frame to the world frame.

    Weight and index are preserved.
    """
    return replace(
        segment,
        start=pose.transform_point(segment.start),
        end=pose.transform_point(segment.end),
    )
