import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from vru_occlusion import AgentCategory, AgentState, Disc, ObstacleRect, SafetyParams, Sector
from vru_occlusion.geometry import (
    line_of_sight, normalize_heading, rects_overlap, sector_disc_intersects, sector_disc_intersects_array,
    vehicle_area_radius, vehicle_safety_area, vru_area_radius, vru_safety_area, within_sensor_range,
)

from instances import as_rects, los_instances, sector_disc_instances
from oracles import CLEARANCE, line_of_sight_oracle, line_of_sight_oracle_batch, sector_disc_oracle


def car(speed=0.0, heading=0.0, pos=(0.0, 0.0)):
    v = (speed * math.cos(heading), speed * math.sin(heading))
    return AgentState(1, AgentCategory.CAR, pos, v, heading, 4.5, 1.8)


def ped(speed=0.0, pos=(0.0, 0.0)):
    return AgentState(2, AgentCategory.PEDESTRIAN, pos, (speed, 0.0), 0.0, 0.5, 0.5)


# -- safety critical areas -------------------------------------------------------


@pytest.mark.parametrize("speed, expected", [(10.0, 15.0 + 100 / 5.76), (5.0, 7.5 + 25 / 5.76), (0.0, 0.0)])
def test_vehicle_radius(speed, expected):
    area = vehicle_safety_area(car(speed))
    assert area.radius == pytest.approx(expected, rel=1e-12)
    assert area.half_angle == pytest.approx(math.pi / 6)


def test_vehicle_radius_frozen_values():
    assert vehicle_area_radius(10.0, SafetyParams()) == pytest.approx(32.3611111, abs=1e-6)
    assert vehicle_area_radius(5.0, SafetyParams()) == pytest.approx(11.8402778, abs=1e-6)


def test_vehicle_area_carries_pose():
    a = vehicle_safety_area(car(10.0, heading=1.0, pos=(3.0, -2.0)))
    assert a.apex == (3.0, -2.0) and a.axis == 1.0


@pytest.mark.parametrize("speed", [1.4, 6.0, 0.0])
def test_vru_radius(speed):
    disc = vru_safety_area(ped(speed, (1.0, 2.0)))
    assert disc.radius == pytest.approx(speed)
    assert disc.center == (1.0, 2.0)


def test_area_builders_check_category():
    with pytest.raises(ValueError):
        vehicle_safety_area(ped(1.0))
    with pytest.raises(ValueError):
        vru_safety_area(car(1.0))


def test_safety_params_validation():
    with pytest.raises(ValueError):
        SafetyParams(mu=0)
    with pytest.raises(ValueError):
        SafetyParams(wedge_apex_angle=4.0)
    assert SafetyParams(wedge_apex_angle=math.pi).half_angle == pytest.approx(math.pi / 2)


@given(st.floats(0, 60), st.floats(0, 60))
def test_vehicle_radius_strictly_increasing(v1, v2):
    assume(v1 < v2)
    p = SafetyParams()
    assert vehicle_area_radius(v1, p) < vehicle_area_radius(v2, p)


# -- sector / disc -----------------------------------------------------------------

SECTOR = Sector((0.0, 0.0), 0.0, math.pi / 6, 30.0)


def test_disc_on_axis_intersects():
    assert sector_disc_intersects(SECTOR, Disc((10.0, 0.0), 1.0))


def test_disc_behind_apex_misses():
    assert not sector_disc_intersects(SECTOR, Disc((0.0, -10.0), 1.0))


def test_zero_radius_sector_is_empty():
    assert not sector_disc_intersects(Sector((0.0, 0.0), 0.0, math.pi / 6, 0.0), Disc((0.0, 0.0), 5.0))
    assert not sector_disc_intersects(Sector((0.0, 0.0), 0.0, math.pi / 6, 0.0), Disc((0.0, 0.0), 0.0))


def test_point_disc():
    assert sector_disc_intersects(SECTOR, Disc((10.0, 1.0), 0.0))
    assert not sector_disc_intersects(SECTOR, Disc((10.0, 8.0), 0.0))  # outside the 30 degree span
    # the closed sector contains its arc and its edges
    assert sector_disc_intersects(SECTOR, Disc((30.0, 0.0), 0.0))


def test_disc_touching_arc_and_edge():
    assert sector_disc_intersects(SECTOR, Disc((32.0, 0.0), 2.0))
    assert not sector_disc_intersects(SECTOR, Disc((32.5, 0.0), 2.0))
    # disc beside the upper edge: distance from (10, 10) to the edge line y = x tan(30)
    edge_dist = abs(10 * math.sin(math.pi / 6) - 10 * math.cos(math.pi / 6))
    assert sector_disc_intersects(SECTOR, Disc((10.0, 10.0), edge_dist + 1e-9))
    assert not sector_disc_intersects(SECTOR, Disc((10.0, 10.0), edge_dist - 1e-9))


def test_disc_covering_apex():
    assert sector_disc_intersects(SECTOR, Disc((-3.0, 0.0), 3.5))
    assert not sector_disc_intersects(SECTOR, Disc((-3.0, 0.0), 2.5))


def test_type_check():
    with pytest.raises(TypeError):
        sector_disc_intersects(Disc((0, 0), 1), SECTOR)


def test_sector_disc_against_oracle_sample():
    rng = np.random.default_rng(2024)
    inst = sector_disc_instances(rng, 400)
    cols = [inst[k] for k in ("ax", "ay", "axis", "half", "radius", "cx", "cy", "r")]
    expected, clearance = sector_disc_oracle(*cols, rng=np.random.default_rng(1))
    got = sector_disc_intersects_array(*cols)
    ok = clearance > CLEARANCE
    assert ok.sum() > 380
    assert np.array_equal(got[ok], expected[ok])
    # both outcomes are represented
    assert 50 < expected[ok].sum() < 350


def _rotate(p, theta, shift):
    c, s = math.cos(theta), math.sin(theta)
    return (c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1])


coord = st.floats(-40, 40, allow_nan=False)


@given(coord, coord, st.floats(0, 2 * math.pi), st.floats(0.05, math.pi / 2), st.floats(0, 40),
       coord, coord, st.floats(0, 6), st.floats(0, 2 * math.pi), coord, coord)
def test_sector_disc_rigid_motion(ax, ay, axis, half, radius, cx, cy, r, theta, tx, ty):
    before, clearance = sector_disc_oracle(ax, ay, axis, half, radius, cx, cy, r)
    assume(clearance[0] > 1e-6)
    a2 = _rotate((ax, ay), theta, (tx, ty))
    c2 = _rotate((cx, cy), theta, (tx, ty))
    s1 = Sector((ax, ay), axis, half, radius)
    s2 = Sector(a2, float(normalize_heading(axis + theta)), half, radius)
    assert sector_disc_intersects(s1, Disc((cx, cy), r)) == sector_disc_intersects(s2, Disc(c2, r)) == before[0]


@given(coord, coord, st.floats(0, 2 * math.pi), st.floats(0.05, math.pi / 2), st.floats(0, 40),
       coord, coord, st.floats(0, 6), st.floats(0, 10), st.floats(0, 10))
def test_sector_disc_monotone_in_radii(ax, ay, axis, half, radius, cx, cy, r, dR, dr):
    if sector_disc_intersects(Sector((ax, ay), axis, half, radius), Disc((cx, cy), r)):
        assert sector_disc_intersects(Sector((ax, ay), axis, half, radius + dR), Disc((cx, cy), r))
        assert sector_disc_intersects(Sector((ax, ay), axis, half, radius), Disc((cx, cy), r + dr))


# -- line of sight -----------------------------------------------------------------


def test_obstacle_straddling_segment_blocks():
    assert not line_of_sight((0, 0), (20, 0), [ObstacleRect((10, 0), 0.0, 4.0, 2.0)])


def test_far_obstacle_does_not_block():
    assert line_of_sight((0, 0), (20, 0), [ObstacleRect((10, 10), 0.0, 4.0, 2.0)])
    assert line_of_sight((0, 0), (20, 0), [])


def test_endpoint_touching_rectangle_is_not_blocked():
    # the target sits exactly on the obstacle's near edge
    assert line_of_sight((0, 0), (8, 0), [ObstacleRect((10, 0), 0.0, 4.0, 2.0)])
    # grazing the corner from outside is a touch of the closed box, hence blocked
    assert not line_of_sight((0, 1), (20, 1), [ObstacleRect((10, 0), 0.0, 4.0, 2.0)])


def test_segment_inside_rectangle_is_blocked():
    assert not line_of_sight((9, 0), (11, 0), [ObstacleRect((10, 0), 0.3, 4.0, 2.0)])


def test_rotated_obstacle():
    # a thin bar rotated 90 degrees crosses the x-axis, unrotated it is beside it
    assert not line_of_sight((0, 0), (20, 0), [ObstacleRect((10, 3), math.pi / 2, 8.0, 0.5)])
    assert line_of_sight((0, 0), (20, 0), [ObstacleRect((10, 3), 0.0, 8.0, 0.5)])


def test_line_of_sight_against_oracle_sample():
    inst = los_instances(np.random.default_rng(99), 400)
    visible, clearance = line_of_sight_oracle_batch(inst, np.random.default_rng(5))
    got = np.array([line_of_sight(a, b, as_rects(r)) for a, b, r in inst])
    ok = clearance > CLEARANCE
    assert ok.sum() > 380
    assert np.array_equal(got[ok], visible[ok])
    assert 50 < visible[ok].sum() < 350


@given(coord, coord, coord, coord, coord, coord, st.floats(0, 2 * math.pi), st.floats(0.5, 10),
       st.floats(0.5, 3), st.floats(0, 2 * math.pi), coord, coord)
def test_line_of_sight_rigid_motion(ax, ay, bx, by, cx, cy, h, length, width, theta, tx, ty):
    rect = ((cx, cy), h, length, width)
    vis, clearance = line_of_sight_oracle((ax, ay), (bx, by), [rect])
    assume(clearance > 1e-6)
    moved = ObstacleRect(_rotate((cx, cy), theta, (tx, ty)), float(normalize_heading(h + theta)), length, width)
    got = line_of_sight(_rotate((ax, ay), theta, (tx, ty)), _rotate((bx, by), theta, (tx, ty)), [moved])
    assert got == line_of_sight((ax, ay), (bx, by), [ObstacleRect(*rect)]) == vis


# -- sensor range and misc ----------------------------------------------------------


@pytest.mark.parametrize("d, expected", [(74.9, True), (75.0, True), (80.0, False)])
def test_sensor_range_closed_ball(d, expected):
    assert within_sensor_range((0.0, 0.0), (d, 0.0), 75.0) is expected


def test_sensor_range_requires_positive_radius():
    with pytest.raises(ValueError):
        within_sensor_range((0, 0), (1, 0), 0.0)


def test_obstacle_rect_validation_and_corners():
    with pytest.raises(ValueError):
        ObstacleRect((0, 0), 0.0, 0.0, 1.0)
    corners = ObstacleRect((1.0, 1.0), math.pi / 2, 4.0, 2.0).corners()
    assert np.allclose(sorted(map(tuple, np.round(corners, 9))), [(0, -1), (0, 3), (2, -1), (2, 3)])


def test_rects_overlap():
    a = ObstacleRect((0, 0), 0.0, 4.0, 2.0)
    assert rects_overlap(a, ObstacleRect((3.9, 0), 0.0, 4.0, 2.0))
    assert not rects_overlap(a, ObstacleRect((4.1, 0), 0.0, 4.0, 2.0))
    assert rects_overlap(a, ObstacleRect((2.3, 1.3), math.pi / 4, 1.0, 1.0))
    assert not rects_overlap(a, ObstacleRect((2.5, 1.5), math.pi / 4, 1.0, 1.0))


def test_normalize_heading_range():
    h = normalize_heading(np.array([-1e-18, -math.pi, 7.0, 2 * math.pi]))
    assert np.all((h >= 0) & (h < 2 * math.pi))
