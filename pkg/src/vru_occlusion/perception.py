"""Direct sensing and CPM fusion among equipped vehicles.

Direct sensing is geometry only (range + line of sight) and does not depend
on equipage, so it is computed once per scenario on the dense slot layout and
reused by every sweep cell.  Fusion then needs gathers and one batched
boolean product per frame block.

CPM timing uses integer microseconds and an exact rational frame rate so
that emission frames and freshness windows never depend on float rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .geometry import _clip_blocked, segment_blocked_local, to_local
from .scenario import DenseView, Scenario, Scene

SENSOR_RADIUS = 75.0  # m
CPM_INTERVAL = 0.1  # s
_US = 1_000_000
# [frames, observers, targets, obstacles] elements per line-of-sight block
_BLOCK_ELEMENTS = 1_500_000


def equipped_count(rate: float, n: int) -> int:
    """round(rate * n), halves rounded up."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"penetration rate {rate} outside [0, 1]")
    x = Fraction(rate).limit_denominator(10**9) * n
    return math.floor(x + Fraction(1, 2))


@dataclass(frozen=True)
class EquipageAssignment:
    penetration_rate: float
    seed: int
    equipped: frozenset[int]


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def assign_equipage(vehicle_ids: Sequence[int], rate: float, seed) -> EquipageAssignment:
    """Uniform sample without replacement of ``round(rate * n)`` vehicles."""
    ids = list(vehicle_ids)
    k = equipped_count(rate, len(ids))
    perm = _rng(seed).permutation(len(ids))
    chosen = frozenset(ids[i] for i in perm[:k])
    return EquipageAssignment(rate, _seed_label(seed), chosen)


def nested_equipage(vehicle_ids: Sequence[int], rates: Sequence[float], seed) -> list[EquipageAssignment]:
    """One permutation per seed, each rate equips its prefix: E(r1) <= E(r2) for r1 <= r2."""
    ids = list(vehicle_ids)
    perm = _rng(seed).permutation(len(ids))
    return [
        EquipageAssignment(r, _seed_label(seed), frozenset(ids[i] for i in perm[:equipped_count(r, len(ids))]))
        for r in rates
    ]


def _seed_label(seed) -> int:
    if isinstance(seed, np.random.SeedSequence):
        return int(seed.entropy)
    return int(seed)


@dataclass(frozen=True)
class CpmSchedule:
    """CPM generation times ``phase + k * interval`` (k >= 0) per sender.

    ``phases`` maps vehicle id to an offset in ``[0, interval)``; missing
    vehicles use offset 0 (synchronized senders).
    """

    interval: float = CPM_INTERVAL
    phases: Mapping[int, float] = field(default_factory=dict)
    phase_mode: str = "synchronized"

    def __post_init__(self):
        if not self.interval > 0:
            raise ValueError("CPM interval must be > 0")
        if self.interval_us < 1:
            raise ValueError("CPM interval must be at least 1 microsecond")
        for vid, p in self.phases.items():
            if not 0.0 <= p < self.interval:
                raise ValueError(f"phase of vehicle {vid} outside [0, interval)")

    @property
    def interval_us(self) -> int:
        return round(self.interval * _US)

    def phase_us(self, vehicle_id: int) -> int:
        return min(int(math.floor(self.phases.get(vehicle_id, 0.0) * _US)), self.interval_us - 1)

    @classmethod
    def random_phases(cls, vehicle_ids: Iterable[int], interval: float = CPM_INTERVAL, seed=0) -> CpmSchedule:
        ids = sorted(vehicle_ids)
        interval_us = round(interval * _US)
        offsets = _rng(seed).integers(0, interval_us, size=len(ids))
        return cls(interval, {vid: int(o) / _US for vid, o in zip(ids, offsets)}, "random")

    def slot_gap(self, frame_rate: float) -> int:
        """Frames a dense slot must stay empty so stale CPMs never alias a new occupant."""
        rate = _rate_fraction(frame_rate)
        return math.ceil(Fraction(self.interval_us, _US) * rate) + 1


def _rate_fraction(frame_rate: float) -> Fraction:
    return Fraction(frame_rate).limit_denominator(1000)


# -- direct sensing ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DirectSensing:
    view: DenseView
    sensor_radius: float
    direct: np.ndarray  # [F, vehicle slots, all slots] bool


def _direct_block(view: DenseView, lo: int, hi: int, radius: float) -> np.ndarray:
    Sv = view.n_vehicle_slots
    present = view.agent[lo:hi] >= 0
    x, y = view.x[lo:hi], view.y[lo:hi]
    ox, oy = x[:, :Sv], y[:, :Sv]
    dist = np.hypot(x[:, None, :] - ox[:, :, None], y[:, None, :] - oy[:, :, None])
    seen = present[:, :Sv, None] & present[:, None, :] & (dist <= radius)
    diag = np.arange(Sv)
    seen[:, diag, diag] = False
    if Sv < 2 or not seen.any():
        return seen

    heading = view.heading[lo:hi, :Sv]
    cos_h, sin_h = np.cos(heading), np.sin(heading)
    half_l = view.length[lo:hi, :Sv] / 2.0
    half_w = view.width[lo:hi, :Sv] / 2.0
    # every slot point expressed in every vehicle-obstacle frame: [c, point, obstacle]
    lx, ly = to_local(x[:, :, None], y[:, :, None], ox[:, None, :], oy[:, None, :],
                      cos_h[:, None, :], sin_h[:, None, :])
    # Cohen-Sutherland outcodes; a shared bit means the segment's bounding box
    # misses the rectangle (same trivial reject as segment_blocked_local)
    hl3, hw3 = half_l[:, None, :], half_w[:, None, :]
    codes = ((lx < -hl3).astype(np.uint8) | ((lx > hl3) << 1) | ((ly < -hw3) << 2)
             | ((ly > hw3) << 3)).astype(np.uint8)
    codes[~np.broadcast_to(present[:, None, :Sv], codes.shape)] = 15
    fi, o, t = np.nonzero(seen)
    ci, k = np.nonzero((codes[fi, o] & codes[fi, t]) == 0)
    keep = (k != o[ci]) & (k != t[ci])
    ci, k = ci[keep], k[keep]
    f, oc, tc = fi[ci], o[ci], t[ci]
    hit = _clip_blocked(lx[f, oc, k], ly[f, oc, k], lx[f, tc, k], ly[f, tc, k], half_l[f, k], half_w[f, k])
    blocked = np.zeros(len(fi), dtype=bool)
    blocked[ci[hit]] = True
    seen[fi, o, t] = ~blocked
    return seen


def compute_direct(view: DenseView, sensor_radius: float = SENSOR_RADIUS) -> np.ndarray:
    if not sensor_radius > 0:
        raise ValueError("sensor_radius must be > 0")
    F, S, Sv = view.n_frames, view.n_slots, view.n_vehicle_slots
    out = np.zeros((F, Sv, S), dtype=bool)
    step = max(1, _BLOCK_ELEMENTS // max(1, Sv * S * Sv))
    for lo in range(0, F, step):
        hi = min(F, lo + step)
        out[lo:hi] = _direct_block(view, lo, hi, sensor_radius)
    return out


def direct_sensing(scenario: Scenario, sensor_radius: float = SENSOR_RADIUS,
                   min_slot_gap: int = 1) -> DirectSensing:
    key = ("direct", float(sensor_radius), min_slot_gap)
    cache = scenario._cache
    if key not in cache:
        view = scenario.dense(min_slot_gap)
        cache[key] = DirectSensing(view, float(sensor_radius), compute_direct(view, sensor_radius))
    return cache[key]


def direct_detections(scene: Scene, observer_id: int, sensor_radius: float = SENSOR_RADIUS) -> set[int]:
    """Agents the observer senses directly: within range and not hidden by another vehicle."""
    observer = scene.agent(observer_id)
    if not observer.category.is_vehicle:
        raise ValueError(f"observer {observer_id} is not a vehicle")
    others = [a for a in scene.agents if a.agent_id != observer_id]
    if not others:
        return set()
    tx = np.array([a.position[0] for a in others])
    ty = np.array([a.position[1] for a in others])
    ox, oy = observer.position
    seen = np.hypot(tx - ox, ty - oy) <= sensor_radius

    obstacles = [a for a in others if a.category.is_vehicle]
    if obstacles and seen.any():
        cx = np.array([a.position[0] for a in obstacles])
        cy = np.array([a.position[1] for a in obstacles])
        heading = np.array([a.heading for a in obstacles])
        cos_h, sin_h = np.cos(heading), np.sin(heading)
        hl = np.array([a.footprint_length for a in obstacles]) / 2.0
        hw = np.array([a.footprint_width for a in obstacles]) / 2.0
        ax, ay = to_local(np.float64(ox), np.float64(oy), cx, cy, cos_h, sin_h)
        bx, by = to_local(tx[:, None], ty[:, None], cx[None, :], cy[None, :], cos_h[None, :], sin_h[None, :])
        blocked = segment_blocked_local(ax[None, :], ay[None, :], bx, by, hl[None, :], hw[None, :])
        self_obstacle = np.array([[t.agent_id == k.agent_id for k in obstacles] for t in others])
        seen &= ~np.any(blocked & ~self_obstacle, axis=1)
    return {a.agent_id for a, s in zip(others, seen) if s}


# -- fusion ------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PerceptionMap:
    """tracked(f, j): agent ids vehicle j tracks at frame f (present agents only)."""

    view: DenseView
    tracked_slots: np.ndarray  # [F, vehicle slots, all slots] bool
    equipped: frozenset[int] = frozenset()

    def _locate(self, frame: int, agent_id: int) -> tuple[int, int]:
        v = self.view
        f = frame - v.frame0
        idx = v.index_of(agent_id)
        if not (0 <= f < v.n_frames) or v.agent[f, v.agent_slot[idx]] != idx:
            raise KeyError(f"agent {agent_id} absent at frame {frame}")
        return f, int(v.agent_slot[idx])

    def tracked(self, frame: int, vehicle_id: int) -> frozenset[int]:
        f, s = self._locate(frame, vehicle_id)
        if s >= self.view.n_vehicle_slots:
            raise ValueError(f"agent {vehicle_id} is not a vehicle")
        agents = self.view.agent[f][self.tracked_slots[f, s]]
        return frozenset(int(i) for i in self.view.agent_ids[agents])

    def is_tracked(self, frame: int, vehicle_id: int, vru_id: int) -> bool:
        f, s = self._locate(frame, vehicle_id)
        _, t = self._locate(frame, vru_id)
        if s >= self.view.n_vehicle_slots:
            raise ValueError(f"agent {vehicle_id} is not a vehicle")
        return bool(self.tracked_slots[f, s, t])

    def to_dict(self) -> dict[int, dict[int, list[int]]]:
        """frame -> vehicle -> sorted tracked ids (debug serialization)."""
        v = self.view
        out: dict[int, dict[int, list[int]]] = {}
        for f in range(v.n_frames):
            row = {}
            for s in range(v.n_vehicle_slots):
                idx = v.agent[f, s]
                if idx >= 0:
                    ids = v.agent_ids[v.agent[f][self.tracked_slots[f, s]]]
                    row[int(v.agent_ids[idx])] = sorted(int(i) for i in ids)
            out[v.frame0 + f] = row
        return out

    @classmethod
    def from_sets(cls, scenario: Scenario, tracked: Mapping[tuple[int, int], Iterable[int]],
                  equipped: Iterable[int] = ()) -> PerceptionMap:
        """Build a map from explicit ``(frame, vehicle_id) -> ids`` sets; missing keys are empty."""
        view = scenario.dense(1)
        arr = np.zeros((view.n_frames, view.n_vehicle_slots, view.n_slots), dtype=bool)
        pm = cls(view, arr, frozenset(equipped))
        for (frame, vid), ids in tracked.items():
            f, s = pm._locate(frame, vid)
            for aid in ids:
                _, t = pm._locate(frame, aid)
                arr[f, s, t] = True
        return pm


def is_tracked(perception: PerceptionMap, frame: int, vehicle: int, vru: int) -> bool:
    return perception.is_tracked(frame, vehicle, vru)


def _emission_frames(view: DenseView, phase_us: np.ndarray, interval_us: int, frame_rate: float):
    """Per (frame, vehicle slot): emission frame of the CPM covering it, and validity.

    The sender of slot s at frame f is the latest occupant that has already
    appeared; it may have left less than one interval ago.
    """
    F, Sv = view.n_frames, view.n_vehicle_slots
    rate = _rate_fraction(frame_rate)
    P, Q = rate.numerator, rate.denominator
    frames = np.arange(F)
    occ = view.agent[:, :Sv]
    pos = np.where(occ >= 0, frames[:, None], -1)
    last_pos = np.maximum.accumulate(pos, axis=0) if F else pos
    sender = np.where(last_pos >= 0, np.take_along_axis(occ, np.clip(last_pos, 0, None), axis=0), -1)
    sidx = np.clip(sender, 0, None)

    p = phase_us[sidx]
    first = view.first[sidx]
    last = view.last[sidx]
    period = interval_us * P
    t_scaled = (view.frame0 + frames)[:, None] * (Q * _US)  # t_f in us, times P
    k = (t_scaled - p * P) // period
    num_last = (last + 1) * (Q * _US) - p * P
    k_last = -((-num_last) // period) - 1
    k = np.minimum(k, k_last)
    emission = ((p + k * interval_us) * P) // (Q * _US)
    fresh = (p + (k + 1) * interval_us) * P > t_scaled
    valid = (sender >= 0) & (k >= 0) & (emission >= first) & fresh
    return sender, np.clip(emission - view.frame0, 0, max(F - 1, 0)), valid


def fuse_from_direct(view: DenseView, direct: np.ndarray, equipped_mask: np.ndarray,
                     phase_us: np.ndarray, interval_us: int, frame_rate: float,
                     block: int = 512) -> np.ndarray:
    """tracked = direct | CPM objects received within the freshness window.

    ``equipped_mask`` and ``phase_us`` are indexed by agent index.
    """
    F, Sv, S = direct.shape
    tracked = direct.copy()
    if F == 0 or Sv < 2 or not equipped_mask.any():
        return tracked
    sender, emission, valid = _emission_frames(view, phase_us, interval_us, frame_rate)
    valid &= equipped_mask[np.clip(sender, 0, None)]
    not_self = ~np.eye(Sv, dtype=bool)
    s_idx = np.arange(Sv)
    for lo in range(0, F, block):
        hi = min(F, lo + block)
        e = emission[lo:hi]
        now = view.agent[lo:hi]
        then = view.agent[e]  # [c, Sv, S]: slot occupants at each sender's emission frame
        content = direct[e, s_idx[None, :], :]
        content &= (then == now[:, None, :]) & (now >= 0)[:, None, :] & valid[lo:hi, :, None]
        recv = now[:, :Sv]
        recv_ok = (recv >= 0) & equipped_mask[np.clip(recv, 0, None)]
        delivered = (then[:, :, :Sv] == recv[:, None, :]) & recv_ok[:, None, :] & not_self[None]
        received = np.matmul(delivered.transpose(0, 2, 1).astype(np.float32), content.astype(np.float32))
        tracked[lo:hi] |= received > 0
    return tracked


def fuse_cpm(scenario: Scenario, equipage: EquipageAssignment, schedule: CpmSchedule = CpmSchedule(),
             sensor_radius: float = SENSOR_RADIUS, sensing: DirectSensing | None = None) -> PerceptionMap:
    gap = schedule.slot_gap(scenario.frame_rate)
    if sensing is None or sensing.view.min_slot_gap < gap or sensing.sensor_radius != sensor_radius:
        sensing = direct_sensing(scenario, sensor_radius, gap)
    view = sensing.view
    mask = np.isin(view.agent_ids, np.fromiter(equipage.equipped, dtype=np.int64, count=len(equipage.equipped)))
    mask &= view.is_vehicle
    phases = np.array([schedule.phase_us(int(i)) for i in view.agent_ids], dtype=np.int64)
    tracked = fuse_from_direct(view, sensing.direct, mask, phases, schedule.interval_us, scenario.frame_rate)
    return PerceptionMap(view, tracked, frozenset(int(i) for i in view.agent_ids[mask]))


def line_of_sight_only(scenario: Scenario, sensor_radius: float = SENSOR_RADIUS,
                       sensing: DirectSensing | None = None) -> PerceptionMap:
    """CPM-free perception: every vehicle tracks exactly what it sees."""
    if sensing is None or sensing.sensor_radius != sensor_radius:
        sensing = direct_sensing(scenario, sensor_radius, 1)
    return PerceptionMap(sensing.view, sensing.direct.copy(), frozenset())
