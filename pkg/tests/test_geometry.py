import math

import pytest
from hypothesis import given, settings, strategies as st

from isac_handover.geometry import (
    AngleSector,
    GeometryError,
    LosState,
    Obstacle,
    Point,
    Trajectory,
    angular_separation,
    bearing,
    in_sensing_coverage,
    los_state,
    sample_trajectory,
)

coord = st.floats(-200, 200, allow_nan=False, allow_infinity=False)
points = st.builds(Point, coord, coord)


def test_linear_sampling():
    traj = Trajectory((Point(0, 0), Point(10, 0)), 3)
    assert sample_trajectory(traj) == [Point(0, 0), Point(5, 0), Point(10, 0)]


def test_polyline_sampling_spacing():
    traj = Trajectory((Point(0, 0), Point(0, 4), Point(3, 4)), 8)
    pts = sample_trajectory(traj)
    assert len(pts) == 8
    # every sample lies exactly k metres of arc from the start
    for k, p in enumerate(pts):
        arc = p.y if p.y < 4 or p.x == 0 else 4 + p.x
        assert arc == pytest.approx(k, abs=1e-12)


def test_canonical_trajectory_has_120_points():
    from isac_handover import load_scenario

    pts = sample_trajectory(load_scenario("scenario1").trajectory)
    assert len(pts) == 120


def test_degenerate_trajectory_rejected():
    with pytest.raises(GeometryError):
        Trajectory((Point(1, 1), Point(1, 1)), 5)
    with pytest.raises(GeometryError):
        Trajectory((Point(0, 0), Point(1, 1)), 1)


def test_los_examples():
    a, b = Point(0, 0), Point(10, 0)
    assert los_state(a, b, []) is LosState.LOS
    assert los_state(a, b, [Obstacle(Point(5, -1), Point(5, 1))]) is LosState.NLOS
    assert los_state(a, b, [Obstacle(Point(5, 1), Point(5, 2))]) is LosState.LOS


def test_touching_endpoint_is_los():
    assert los_state(Point(0, 0), Point(10, 0), [Obstacle(Point(5, 0), Point(5, 3))]) is LosState.LOS


def test_bearing_examples():
    assert bearing(Point(0, 0), Point(1, 0)) == 0.0
    assert bearing(Point(0, 0), Point(0, 1)) == pytest.approx(math.pi / 2)
    assert bearing(Point(1, 1), Point(0, 0)) == pytest.approx(-3 * math.pi / 4)
    assert bearing(Point(0, 0), Point(-1, 0)) == pytest.approx(math.pi)
    with pytest.raises(GeometryError):
        bearing(Point(2, 2), Point(2, 2))


def test_angular_separation_examples():
    o = Point(0, 0)
    assert angular_separation(o, Point(1, 0), Point(2, 0)) == 0.0
    assert angular_separation(o, Point(1, 0), Point(0, 1)) == pytest.approx(math.pi / 2)
    assert angular_separation(o, Point(1, 0), Point(-1, 1e-9)) == pytest.approx(math.pi)
    assert angular_separation(o, Point(-1, 1e-9), Point(-1, -1e-9)) == pytest.approx(0, abs=1e-8)


def test_coverage_examples():
    ap = Point(0, 0)
    assert in_sensing_coverage(ap, Point(10, 0), [], 100.0)
    sector = [AngleSector(-0.1, 0.1)]
    assert not in_sensing_coverage(ap, Point(10, 0), [], 100.0, sector)
    wall = [Obstacle(Point(5, -1), Point(5, 1))]
    assert not in_sensing_coverage(ap, Point(10, 0), wall, 100.0)
    assert not in_sensing_coverage(ap, Point(10, 0), [], 5.0)
    with pytest.raises(GeometryError):
        in_sensing_coverage(ap, Point(10, 0), [], 0.0)


def test_sector_wraps_through_pi():
    s = AngleSector(3.0, -3.0)
    assert s.contains(math.pi)
    assert not s.contains(0.0)


def test_non_finite_point_rejected():
    with pytest.raises(GeometryError):
        Point(float("nan"), 0)


@settings(max_examples=1000)
@given(points, points, st.lists(st.tuples(points, points), max_size=5))
def test_los_symmetry(a, b, walls):
    obstacles = [Obstacle(p, q) for p, q in walls if p != q]
    assert los_state(a, b, obstacles) is los_state(b, a, obstacles)


def _walk(waypoints, s):
    """Independent oracle: the point at arc length ``s`` along the polyline."""
    for a, b in zip(waypoints, waypoints[1:]):
        seg = math.hypot(b.x - a.x, b.y - a.y)
        if s <= seg:
            f = s / seg
            return (a.x + f * (b.x - a.x), a.y + f * (b.y - a.y))
        s -= seg
    return waypoints[-1].as_tuple()


@settings(max_examples=1000)
@given(st.lists(points, min_size=2, max_size=6), st.integers(2, 60))
def test_sampling_spacing_constant(waypoints, count):
    pruned = [waypoints[0]]
    for p in waypoints[1:]:
        if p.distance_to(pruned[-1]) > 1e-3:
            pruned.append(p)
    if len(pruned) < 2:
        return
    traj = Trajectory(tuple(pruned), count)
    pts = sample_trajectory(traj)
    assert len(pts) == count
    assert pts[0] == pruned[0] and pts[-1] == pruned[-1]
    total = traj.length
    for k, p in enumerate(pts):
        x, y = _walk(pruned, total * k / (count - 1))
        assert math.hypot(p.x - x, p.y - y) <= 1e-9 * max(total, 1.0)


@settings(max_examples=1000)
@given(points, points, points)
def test_angular_separation_symmetric(o, p1, p2):
    if o in (p1, p2):
        return
    s = angular_separation(o, p1, p2)
    assert 0.0 <= s <= math.pi
    assert s == angular_separation(o, p2, p1)


@settings(max_examples=1000)
@given(
    points,
    points,
    st.lists(st.tuples(points, points), max_size=3),
    st.floats(1, 300),
    st.floats(0, 300),
)
def test_coverage_monotone_in_range(ap, p, walls, r, extra):
    obstacles = [Obstacle(a, b) for a, b in walls if a != b]
    if in_sensing_coverage(ap, p, obstacles, r):
        assert in_sensing_coverage(ap, p, obstacles, r + extra)
