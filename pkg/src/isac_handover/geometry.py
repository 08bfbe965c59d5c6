"""Planar world model: points, object trajectories, line-of-sight and coverage."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence


class GeometryError(ValueError):
    """Raised for degenerate geometric input (coincident points, empty paths)."""


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite coordinates ({self.x}, {self.y})")

    def distance_to(self, other: Point) -> float:
        return math.hypot(other.x - self.x, other.y - self.y)

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-linear object path sampled at ``snapshot_count`` instants."""

    waypoints: tuple[Point, ...]
    snapshot_count: int

    def __post_init__(self):
        object.__setattr__(self, "waypoints", tuple(self.waypoints))
        if len(self.waypoints) < 2:
            raise GeometryError("trajectory needs at least two waypoints")
        if self.snapshot_count < 2:
            raise GeometryError("snapshot_count must be >= 2")
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            if a == b:
                raise GeometryError(f"consecutive waypoints coincide at {a}")

    @property
    def length(self) -> float:
        return sum(a.distance_to(b) for a, b in zip(self.waypoints, self.waypoints[1:]))


@dataclass(frozen=True)
class Obstacle:
    """Opaque wall given by its two endpoints."""

    start: Point
    end: Point

    def __post_init__(self):
        if self.start == self.end:
            raise GeometryError("obstacle endpoints must be distinct")


class LosState(Enum):
    LOS = "los"
    NLOS = "nlos"


@dataclass(frozen=True)
class AngleSector:
    """Closed bearing interval swept counter-clockwise from ``start`` to ``end``."""

    start: float
    end: float

    def contains(self, angle: float) -> bool:
        width = (self.end - self.start) % (2 * math.pi)
        offset = (angle - self.start) % (2 * math.pi)
        return offset <= width


def wrap_angle(angle: float) -> float:
    """Map an angle onto (-pi, pi]."""
    wrapped = math.atan2(math.sin(angle), math.cos(angle))
    if wrapped == -math.pi:
        return math.pi
    return wrapped


def sample_trajectory(traj: Trajectory) -> list[Point]:
    """Sample the polyline uniformly in arc length, endpoints included."""
    pts = traj.waypoints
    seg_lengths = [a.distance_to(b) for a, b in zip(pts, pts[1:])]
    total = sum(seg_lengths)
    if total <= 0.0:
        raise GeometryError("trajectory has zero length")

    n = traj.snapshot_count
    out = []
    seg = 0
    walked = 0.0  # arc length at the start of segment `seg`
    for k in range(n):
        if k == n - 1:
            out.append(pts[-1])
            break
        s = total * k / (n - 1)
        while seg < len(seg_lengths) - 1 and walked + seg_lengths[seg] < s:
            walked += seg_lengths[seg]
            seg += 1
        a, b = pts[seg], pts[seg + 1]
        t = (s - walked) / seg_lengths[seg]
        out.append(Point(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)))
    return out


def _orient(a: Point, b: Point, c: Point) -> float:
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)


def segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool:
    """True iff segments a-b and c-d properly cross (touching does not count)."""
    # canonical endpoint order keeps the predicate exactly symmetric in floating point
    if (b.x, b.y) < (a.x, a.y):
        a, b = b, a
    if (d.x, d.y) < (c.x, c.y):
        c, d = d, c
    o1 = _orient(a, b, c)
    o2 = _orient(a, b, d)
    o3 = _orient(c, d, a)
    o4 = _orient(c, d, b)
    return o1 * o2 < 0 and o3 * o4 < 0


def los_state(a: Point, b: Point, obstacles: Iterable[Obstacle]) -> LosState:
    for obs in obstacles:
        if segments_cross(a, b, obs.start, obs.end):
            return LosState.NLOS
    return LosState.LOS


def bearing(origin: Point, target: Point) -> float:
    """atan2 bearing of ``target`` seen from ``origin``, in (-pi, pi]."""
    if origin == target:
        raise GeometryError(f"bearing undefined for coincident points {origin}")
    return wrap_angle(math.atan2(target.y - origin.y, target.x - origin.x))


def angular_separation(origin: Point, p1: Point, p2: Point) -> float:
    return abs(wrap_angle(bearing(origin, p1) - bearing(origin, p2)))


def in_sensing_coverage(
    ap_position: Point,
    point: Point,
    obstacles: Sequence[Obstacle],
    max_range: float,
    exclusion_sectors: Sequence[AngleSector] = (),
) -> bool:
    if max_range <= 0:
        raise GeometryError("max_range must be positive")
    if ap_position.distance_to(point) > max_range:
        return False
    if los_state(ap_position, point, obstacles) is LosState.NLOS:
        return False
    if ap_position == point:
        return True
    theta = bearing(ap_position, point)
    return not any(sector.contains(theta) for sector in exclusion_sectors)
