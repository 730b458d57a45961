"""Safety critical areas and the visibility predicates the risk metric needs.

All predicates are written once as numpy kernels that broadcast over their
arguments.  The scalar functions are thin wrappers around the same kernels,
so the per-scene API and the dense sweep path give bit-identical answers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class SafetyParams:
    t_react: float = 1.5  # s
    decel_g: float = 3.2  # m/s^2
    mu: float = 0.9
    wedge_apex_angle: float = math.pi / 3  # rad, full apex angle of the vehicle wedge
    t_risk: float = 1.0  # s

    def __post_init__(self):
        for name in ("t_react", "decel_g", "mu", "wedge_apex_angle", "t_risk"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if self.wedge_apex_angle > math.pi:
            raise ValueError("wedge_apex_angle must lie in (0, pi]")

    @property
    def half_angle(self) -> float:
        return self.wedge_apex_angle / 2.0


@dataclass(frozen=True)
class Sector:
    apex: tuple[float, float]
    axis: float
    half_angle: float
    radius: float


@dataclass(frozen=True)
class Disc:
    center: tuple[float, float]
    radius: float


SafetyCriticalArea = Sector | Disc


@dataclass(frozen=True)
class ObstacleRect:
    """Oriented footprint; ``length`` runs along ``heading``."""

    center: tuple[float, float]
    heading: float
    length: float
    width: float

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0):
            raise ValueError("obstacle length and width must be > 0")

    def corners(self) -> np.ndarray:
        c, s = math.cos(self.heading), math.sin(self.heading)
        hl, hw = self.length / 2.0, self.width / 2.0
        local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + np.asarray(self.center, dtype=float)


def vehicle_area_radius(speed, params: SafetyParams):
    """Reaction plus braking distance; works on scalars and arrays."""
    return speed * params.t_react + speed * speed / (2.0 * params.mu * params.decel_g)


def vru_area_radius(speed, params: SafetyParams):
    return speed * params.t_risk


def vehicle_safety_area(state, params: SafetyParams = SafetyParams()) -> Sector:
    if not state.category.is_vehicle:
        raise ValueError(f"agent {state.agent_id} is not a vehicle")
    return Sector(
        apex=tuple(state.position),
        axis=state.heading,
        half_angle=params.half_angle,
        radius=float(vehicle_area_radius(state.speed, params)),
    )


def vru_safety_area(state, params: SafetyParams = SafetyParams()) -> Disc:
    if not state.category.is_vru:
        raise ValueError(f"agent {state.agent_id} is not a VRU")
    return Disc(center=tuple(state.position), radius=float(vru_area_radius(state.speed, params)))


# -- sector / disc ---------------------------------------------------------


def _point_segment_distance(px, py, x0, y0, x1, y1):
    dx = x1 - x0
    dy = y1 - y0
    len2 = dx * dx + dy * dy
    with np.errstate(divide="ignore", invalid="ignore"):
        t = ((px - x0) * dx + (py - y0) * dy) / len2
    t = np.where(len2 > 0, np.clip(t, 0.0, 1.0), 0.0)
    return np.hypot(px - (x0 + t * dx), py - (y0 + t * dy))


def sector_disc_distance(ax, ay, axis, half_angle, radius, cx, cy):
    """Euclidean distance from a point to a closed circular sector (0 inside).

    The sector must be convex, i.e. ``half_angle <= pi/2``.
    """
    dx = cx - ax
    dy = cy - ay
    d = np.hypot(dx, dy)
    ux = np.cos(axis)
    uy = np.sin(axis)
    in_span = dx * ux + dy * uy >= d * np.cos(half_angle)
    inside = in_span & (d <= radius)

    lo = axis - half_angle
    hi = axis + half_angle
    edge = np.minimum(
        _point_segment_distance(cx, cy, ax, ay, ax + radius * np.cos(lo), ay + radius * np.sin(lo)),
        _point_segment_distance(cx, cy, ax, ay, ax + radius * np.cos(hi), ay + radius * np.sin(hi)),
    )
    arc = np.where(in_span, np.abs(d - radius), np.inf)
    return np.where(inside, 0.0, np.minimum(edge, arc))


def sector_disc_intersects_array(ax, ay, axis, half_angle, radius, cx, cy, disc_radius):
    """Broadcasting closed sector / closed disc test.

    A radius-0 sector is empty; a radius-0 disc degenerates to a point test.
    """
    dist = sector_disc_distance(ax, ay, axis, half_angle, radius, cx, cy)
    return (radius > 0) & (dist <= disc_radius)


def sector_disc_intersects(sector: Sector, disc: Disc) -> bool:
    if not isinstance(sector, Sector) or not isinstance(disc, Disc):
        raise TypeError("expected (Sector, Disc)")
    return bool(
        sector_disc_intersects_array(
            sector.apex[0], sector.apex[1], sector.axis, sector.half_angle, sector.radius,
            disc.center[0], disc.center[1], disc.radius,
        )
    )


# -- line of sight -----------------------------------------------------------


def to_local(px, py, cx, cy, cos_h, sin_h):
    """World point into a rectangle frame (x along heading)."""
    rx = px - cx
    ry = py - cy
    return rx * cos_h + ry * sin_h, ry * cos_h - rx * sin_h


def _slab(a, d, half):
    inside = np.abs(a) <= half
    # tiny directions overflow to +-inf, which still orders the slab bounds correctly
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t1 = (-half - a) / d
        t2 = (half - a) / d
    moving = d != 0
    lo = np.where(moving, np.minimum(t1, t2), np.where(inside, -np.inf, np.inf))
    hi = np.where(moving, np.maximum(t1, t2), np.where(inside, np.inf, -np.inf))
    return lo, hi


def segment_blocked_local(ax, ay, bx, by, half_length, half_width):
    """Does the open segment a->b meet the closed box |x|<=hl, |y|<=hw?

    Coordinates are already in the box frame.  Touching the box only at an
    endpoint of the segment does not count.
    """
    ax, ay, bx, by, half_length, half_width = np.broadcast_arrays(ax, ay, bx, by, half_length, half_width)
    # segments whose bounding box misses the rectangle cannot be blocked by it
    near = ((np.maximum(ax, bx) >= -half_length) & (np.minimum(ax, bx) <= half_length)
            & (np.maximum(ay, by) >= -half_width) & (np.minimum(ay, by) <= half_width))
    out = np.zeros(near.shape, dtype=bool)
    if near.any():
        out[near] = _clip_blocked(ax[near], ay[near], bx[near], by[near], half_length[near], half_width[near])
    return out


def _clip_blocked(ax, ay, bx, by, half_length, half_width):
    dx = bx - ax
    dy = by - ay
    lo_x, hi_x = _slab(ax, dx, half_length)
    lo_y, hi_y = _slab(ay, dy, half_width)
    t_in = np.maximum(lo_x, lo_y)
    t_out = np.minimum(hi_x, hi_y)
    return (t_in <= t_out) & (t_in < 1.0) & (t_out > 0.0) & ((dx != 0) | (dy != 0))


def line_of_sight(observer, target, obstacles: Sequence[ObstacleRect]) -> bool:
    if not obstacles:
        return True
    cx = np.array([o.center[0] for o in obstacles], dtype=float)
    cy = np.array([o.center[1] for o in obstacles], dtype=float)
    heading = np.array([o.heading for o in obstacles], dtype=float)
    hl = np.array([o.length for o in obstacles], dtype=float) / 2.0
    hw = np.array([o.width for o in obstacles], dtype=float) / 2.0
    c, s = np.cos(heading), np.sin(heading)
    ax, ay = to_local(float(observer[0]), float(observer[1]), cx, cy, c, s)
    bx, by = to_local(float(target[0]), float(target[1]), cx, cy, c, s)
    return not bool(np.any(segment_blocked_local(ax, ay, bx, by, hl, hw)))


def within_sensor_range(observer, target, sensor_radius: float) -> bool:
    if not sensor_radius > 0:
        raise ValueError("sensor_radius must be > 0")
    d = np.hypot(float(target[0]) - float(observer[0]), float(target[1]) - float(observer[1]))
    return bool(d <= sensor_radius)


def rects_overlap(a: ObstacleRect, b: ObstacleRect) -> bool:
    """Separating-axis test for two closed oriented rectangles."""
    ca, cb = a.corners(), b.corners()
    for rect in (a, b):
        c, s = math.cos(rect.heading), math.sin(rect.heading)
        for axis in ((c, s), (-s, c)):
            pa = ca @ axis
            pb = cb @ axis
            if pa.max() < pb.min() or pb.max() < pa.min():
                return False
    return True


def normalize_heading(theta):
    """Wrap into [0, 2*pi)."""
    out = np.mod(theta, TWO_PI)
    # np.mod can return exactly 2*pi for tiny negative inputs
    return np.where(out >= TWO_PI, 0.0, out)
