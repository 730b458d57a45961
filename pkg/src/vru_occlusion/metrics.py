"""Frame occlusion risk, per-vehicle risk counts, maximum tracking loss.

Occlusion inside the frame-risk count is judged by tracked status, so a VRU
known through a fresh CPM counts as seen.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import SafetyParams, sector_disc_intersects_array, vehicle_area_radius, vru_area_radius
from .perception import PerceptionMap
from .scenario import DenseView, Scenario, Scene

MTL_VARIANTS = ("any_vehicle", "per_vehicle_max")


@dataclass(frozen=True)
class FrameRisk:
    frame_index: int
    significant_interactions: int
    occluded_interactions: int

    @property
    def ratio(self) -> float | None:
        if self.significant_interactions == 0:
            return None
        return self.occluded_interactions / self.significant_interactions


@dataclass(frozen=True)
class VehicleRiskSummary:
    vehicle_id: int
    occluded_interaction_count: int


@dataclass(frozen=True)
class MtlResult:
    vru_id: int
    mtl_frames: int
    mtl_ms: float
    variant: str


@dataclass(frozen=True)
class BoxplotStats:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    whisker_low: float
    whisker_high: float
    outliers: tuple[float, ...]


def _pair_significance(vx_pos, vy_pos, heading, v_speed, ux_pos, uy_pos, u_speed, params):
    return sector_disc_intersects_array(
        vx_pos, vy_pos, heading, params.half_angle, vehicle_area_radius(v_speed, params),
        ux_pos, uy_pos, vru_area_radius(u_speed, params),
    )


def significance(view: DenseView, params: SafetyParams = SafetyParams()) -> np.ndarray:
    """[F, vehicle slots, VRU slots]: safety critical areas intersect."""
    Sv = view.n_vehicle_slots
    present = view.present
    speed = np.hypot(view.vx, view.vy)
    sig = _pair_significance(
        view.x[:, :Sv, None], view.y[:, :Sv, None], view.heading[:, :Sv, None], speed[:, :Sv, None],
        view.x[:, None, Sv:], view.y[:, None, Sv:], speed[:, None, Sv:], params,
    )
    return sig & present[:, :Sv, None] & present[:, None, Sv:]


def frame_risk(scene: Scene, perception: PerceptionMap, params: SafetyParams = SafetyParams()) -> FrameRisk:
    vehicles, vrus = scene.vehicles, scene.vrus
    if not vehicles or not vrus:
        return FrameRisk(scene.frame_index, 0, 0)

    def arr(agents, fn):
        return np.array([fn(a) for a in agents], dtype=float)

    v_speed = np.hypot(arr(vehicles, lambda a: a.velocity[0]), arr(vehicles, lambda a: a.velocity[1]))
    u_speed = np.hypot(arr(vrus, lambda a: a.velocity[0]), arr(vrus, lambda a: a.velocity[1]))
    sig = _pair_significance(
        arr(vehicles, lambda a: a.position[0])[:, None], arr(vehicles, lambda a: a.position[1])[:, None],
        arr(vehicles, lambda a: a.heading)[:, None], v_speed[:, None],
        arr(vrus, lambda a: a.position[0])[None, :], arr(vrus, lambda a: a.position[1])[None, :],
        u_speed[None, :], params,
    )
    significant = occluded = 0
    for i, j in zip(*np.nonzero(sig)):
        significant += 1
        if not perception.is_tracked(scene.frame_index, vehicles[i].agent_id, vrus[j].agent_id):
            occluded += 1
    return FrameRisk(scene.frame_index, significant, occluded)


def occlusion_arrays(perception: PerceptionMap, params: SafetyParams = SafetyParams(),
                     sig: np.ndarray | None = None):
    """Significant and occluded pair masks, both [F, vehicle slots, VRU slots]."""
    view = perception.view
    if sig is None:
        sig = significance(view, params)
    occluded = sig & ~perception.tracked_slots[:, :, view.n_vehicle_slots:]
    return sig, occluded


def frame_risks(perception: PerceptionMap, params: SafetyParams = SafetyParams(),
                sig: np.ndarray | None = None) -> list[FrameRisk]:
    sig, occ = occlusion_arrays(perception, params, sig)
    n_sig = sig.sum(axis=(1, 2))
    n_occ = occ.sum(axis=(1, 2))
    f0 = perception.view.frame0
    return [FrameRisk(f0 + f, int(a), int(b)) for f, (a, b) in enumerate(zip(n_sig, n_occ))]


def _per_agent_slot_sum(view: DenseView, per_slot: np.ndarray, agents: np.ndarray) -> list[int]:
    out = []
    for idx in agents:
        lo = view.first[idx] - view.frame0
        hi = view.last[idx] - view.frame0 + 1
        out.append(int(per_slot[lo:hi, view.agent_slot[idx]].sum()))
    return out


def vehicle_risk_summaries(scenario: Scenario, perception: PerceptionMap,
                           params: SafetyParams = SafetyParams(),
                           sig: np.ndarray | None = None) -> list[VehicleRiskSummary]:
    """Occluded significant (frame, VRU) interactions per vehicle over its lifespan."""
    view = perception.view
    _, occ = occlusion_arrays(perception, params, sig)
    vehicles = np.nonzero(view.is_vehicle)[0]
    counts = _per_agent_slot_sum(view, occ.sum(axis=2), vehicles)
    return [VehicleRiskSummary(int(view.agent_ids[i]), c) for i, c in zip(vehicles, counts)]


def longest_run(mask) -> int:
    """Length of the longest run of True values."""
    m = np.asarray(mask, dtype=bool)
    if not m.any():
        return 0
    padded = np.concatenate([[False], m, [False]])
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return int((edges[1::2] - edges[::2]).max())


def _run_lengths(x: np.ndarray, reset: np.ndarray) -> np.ndarray:
    """Current run length of True along axis 0; ``reset`` starts a fresh run."""
    f = np.arange(x.shape[0]).reshape((-1,) + (1,) * (x.ndim - 1))
    breaks = np.where(~x, f, np.where(reset, f - 1, -1))
    return np.where(x, f - np.maximum.accumulate(breaks, axis=0), 0)


def mtl(scenario: Scenario, perception: PerceptionMap, variant: str = "any_vehicle") -> list[MtlResult]:
    if variant not in MTL_VARIANTS:
        raise ValueError(f"unknown MTL variant {variant!r}")
    view = perception.view
    Sv = view.n_vehicle_slots
    agent = view.agent
    vru_agents = agent[:, Sv:]
    vru_present = vru_agents >= 0
    veh_present = agent[:, :Sv] >= 0
    tracked = perception.tracked_slots[:, :, Sv:]

    if variant == "any_vehicle":
        untracked = vru_present & ~np.any(tracked & veh_present[:, :, None], axis=1)
        per_slot = None
    else:
        x = veh_present[:, :, None] & vru_present[:, None, :] & ~tracked
        changed = np.zeros_like(x)
        if len(x) > 1:
            changed[1:] = ((agent[1:, :Sv] != agent[:-1, :Sv])[:, :, None]
                           | (vru_agents[1:] != vru_agents[:-1])[:, None, :])
        changed[:1] = True
        per_slot = _run_lengths(x, changed).max(axis=1) if Sv else np.zeros(vru_agents.shape, dtype=np.int64)

    results = []
    for idx in np.nonzero(~view.is_vehicle)[0]:
        lo = view.first[idx] - view.frame0
        hi = view.last[idx] - view.frame0 + 1
        if hi <= lo:
            raise ValueError(f"VRU {view.agent_ids[idx]} has an empty lifespan")
        u = view.agent_slot[idx] - Sv
        if per_slot is None:
            frames = longest_run(untracked[lo:hi, u])
        else:
            frames = int(per_slot[lo:hi, u].max())
        results.append(MtlResult(int(view.agent_ids[idx]), frames, frames * 1000.0 / scenario.frame_rate, variant))
    return results


def ccdf(values: Sequence[float]) -> list[tuple[float, float]]:
    """(v, fraction of values strictly greater than v) for each distinct v."""
    arr = np.sort(np.asarray(values, dtype=float))
    if arr.size == 0:
        raise ValueError("ccdf of empty input")
    distinct = np.unique(arr)
    greater = arr.size - np.searchsorted(arr, distinct, side="right")
    return [(float(v), float(g) / arr.size) for v, g in zip(distinct, greater)]


def boxplot_stats(values: Sequence[float]) -> BoxplotStats:
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("boxplot of empty input")
    q1, med, q3 = np.percentile(arr, [25, 50, 75], method="linear")
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = arr[(arr >= lo_fence) & (arr <= hi_fence)]
    outliers = np.sort(arr[(arr < lo_fence) | (arr > hi_fence)])
    return BoxplotStats(
        min=float(arr.min()), q1=float(q1), median=float(med), q3=float(q3), max=float(arr.max()),
        whisker_low=float(inside.min()), whisker_high=float(inside.max()),
        outliers=tuple(float(o) for o in outliers),
    )
