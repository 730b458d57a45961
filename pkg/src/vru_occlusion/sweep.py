"""Run configuration and the penetration-rate x seed sweep."""
from __future__ import annotations

import hashlib
import json
import math
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from .geometry import SafetyParams
from .metrics import MTL_VARIANTS, boxplot_stats, ccdf, frame_risks, mtl, significance, vehicle_risk_summaries
from .perception import (
    CPM_INTERVAL, SENSOR_RADIUS, CpmSchedule, PerceptionMap, assign_equipage, direct_sensing,
    fuse_from_direct, nested_equipage,
)
from .reporting import CellResult, SweepReport, write_report
from .scenario import DEFAULT_COLUMNS, Scenario, SyntheticSpec, generate_synthetic, load_ind_recording

DEFAULT_RATES = (0.0, 0.25, 0.5, 0.75, 1.0)
PHASE_MODES = ("synchronized", "random")
EQUIPAGE_MODES = ("nested", "independent")


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class ScenarioSource:
    kind: str  # "ind" | "synthetic"
    name: str
    tracks: Path | None = None
    tracks_meta: Path | None = None
    recording_meta: Path | None = None
    columns: Mapping[str, str] = field(default_factory=dict)
    synthetic: SyntheticSpec | None = None
    synthetic_seed: int = 0

    def load(self) -> Scenario:
        if self.kind == "ind":
            return load_ind_recording(self.tracks, self.tracks_meta, self.recording_meta,
                                      columns=self.columns or None, name=self.name)
        return generate_synthetic(self.synthetic, self.synthetic_seed, name=self.name)

    def describe(self) -> dict:
        if self.kind == "ind":
            return {"kind": "ind", "name": self.name, "tracks": str(self.tracks),
                    "tracks_meta": str(self.tracks_meta), "recording_meta": str(self.recording_meta),
                    "columns": dict(sorted(self.columns.items()))}
        return {"kind": "synthetic", "name": self.name, "seed": self.synthetic_seed,
                "spec": self.synthetic.to_dict()}


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioSource
    safety: SafetyParams = SafetyParams()
    sensor_radius: float = SENSOR_RADIUS
    cpm_interval: float = CPM_INTERVAL
    phase_mode: str = "synchronized"
    penetration_rates: tuple[float, ...] = DEFAULT_RATES
    seeds: tuple[int, ...] = (0,)
    equipage_mode: str = "nested"
    mtl_variant: str = "any_vehicle"
    output_dir: Path | None = None
    workers: int = 1

    def parameters(self) -> dict:
        """Every setting that can change results (not output location or worker count)."""
        return {
            "scenario": self.scenario.describe(),
            "safety": {
                "t_react": self.safety.t_react, "decel_g": self.safety.decel_g, "mu": self.safety.mu,
                "wedge_apex_angle_deg": math.degrees(self.safety.wedge_apex_angle),
                "t_risk": self.safety.t_risk,
            },
            "sensor_radius": self.sensor_radius,
            "cpm": {"interval": self.cpm_interval, "phase_mode": self.phase_mode},
            "penetration_rates": list(self.penetration_rates),
            "seeds": list(self.seeds),
            "equipage_mode": self.equipage_mode,
            "mtl_variant": self.mtl_variant,
        }

    def digest(self) -> str:
        blob = json.dumps(self.parameters(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


_TOP_KEYS = {"scenario", "safety", "sensor_radius", "cpm", "penetration_rates", "seeds",
             "equipage_mode", "mtl_variant", "output_dir", "workers"}
_SAFETY_KEYS = {"t_react", "decel_g", "mu", "wedge_apex_angle_deg", "t_risk"}


def _number(errors, where, value, positive=True):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        errors.append(f"{where}: expected a number, got {value!r}")
        return None
    if positive and value <= 0:
        errors.append(f"{where}: must be > 0")
        return None
    return float(value)


def _scenario_source(raw, base: Path, errors: list[str]) -> ScenarioSource | None:
    if not isinstance(raw, Mapping):
        errors.append("scenario: expected a mapping with 'ind' or 'synthetic'")
        return None
    unknown = set(raw) - {"ind", "synthetic", "seed", "name"}
    if unknown:
        errors.append(f"scenario: unknown keys {sorted(unknown)}")
    if ("ind" in raw) == ("synthetic" in raw):
        errors.append("scenario: exactly one of 'ind' or 'synthetic' is required")
        return None
    if "ind" in raw:
        ind = raw["ind"]
        if not isinstance(ind, Mapping):
            errors.append("scenario.ind: expected a mapping")
            return None
        bad = set(ind) - {"tracks", "tracks_meta", "recording_meta", "columns"}
        if bad:
            errors.append(f"scenario.ind: unknown keys {sorted(bad)}")
        paths = {}
        for key in ("tracks", "tracks_meta", "recording_meta"):
            if key not in ind:
                errors.append(f"scenario.ind.{key}: required")
                continue
            p = Path(ind[key])
            paths[key] = p if p.is_absolute() else base / p
        columns = ind.get("columns") or {}
        if not isinstance(columns, Mapping) or set(columns) - set(DEFAULT_COLUMNS):
            errors.append(f"scenario.ind.columns: keys must be among {sorted(DEFAULT_COLUMNS)}")
            columns = {}
        if len(paths) < 3:
            return None
        name = str(raw.get("name") or paths["tracks"].stem)
        return ScenarioSource("ind", name, columns=dict(columns), **paths)

    spec_raw = raw["synthetic"]
    if isinstance(spec_raw, str):
        p = Path(spec_raw)
        p = p if p.is_absolute() else base / p
        try:
            spec_raw = yaml.safe_load(p.read_text())
        except OSError as exc:
            errors.append(f"scenario.synthetic: cannot read {p}: {exc}")
            return None
    try:
        spec = SyntheticSpec.from_dict(spec_raw or {})
    except (TypeError, ValueError, KeyError) as exc:
        errors.append(f"scenario.synthetic: {exc}")
        return None
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        errors.append("scenario.seed: expected an integer")
        seed = 0
    return ScenarioSource("synthetic", str(raw.get("name", "synthetic")), synthetic=spec, synthetic_seed=seed)


def config_from_dict(raw: Mapping[str, Any], base_dir=".") -> RunConfig:
    """Resolve defaults and collect every validation error before raising."""
    errors: list[str] = []
    base = Path(base_dir)
    if not isinstance(raw, Mapping):
        raise ConfigError(["config: expected a mapping at top level"])
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        errors.append(f"config: unknown keys {sorted(unknown)}")
    if "scenario" not in raw:
        errors.append("scenario: required")
        source = None
    else:
        source = _scenario_source(raw["scenario"], base, errors)

    safety_raw = raw.get("safety") or {}
    safety_kw = {}
    if not isinstance(safety_raw, Mapping):
        errors.append("safety: expected a mapping")
        safety_raw = {}
    for key in sorted(set(safety_raw) - _SAFETY_KEYS):
        errors.append(f"safety.{key}: unknown key")
    for key in sorted(set(safety_raw) & _SAFETY_KEYS):
        value = _number(errors, f"safety.{key}", safety_raw[key])
        if value is not None:
            if key == "wedge_apex_angle_deg":
                if value > 180:
                    errors.append("safety.wedge_apex_angle_deg: must be <= 180")
                    continue
                safety_kw["wedge_apex_angle"] = math.radians(value)
            else:
                safety_kw[key] = value
    safety = SafetyParams(**safety_kw)

    sensor_radius = _number(errors, "sensor_radius", raw.get("sensor_radius", SENSOR_RADIUS)) or SENSOR_RADIUS

    cpm = raw.get("cpm") or {}
    if not isinstance(cpm, Mapping):
        errors.append("cpm: expected a mapping")
        cpm = {}
    for key in sorted(set(cpm) - {"interval", "phase_mode"}):
        errors.append(f"cpm.{key}: unknown key")
    interval = _number(errors, "cpm.interval", cpm.get("interval", CPM_INTERVAL)) or CPM_INTERVAL
    if interval < 1e-6:
        errors.append("cpm.interval: must be at least 1 microsecond")
    phase_mode = cpm.get("phase_mode", "synchronized")
    if phase_mode not in PHASE_MODES:
        errors.append(f"cpm.phase_mode: must be one of {PHASE_MODES}")

    rates = raw.get("penetration_rates", list(DEFAULT_RATES))
    if not isinstance(rates, list) or not rates:
        errors.append("penetration_rates: expected a non-empty list")
        rates = []
    else:
        ok = [_number(errors, "penetration_rates", r, positive=False) for r in rates]
        if any(r is None for r in ok):
            rates = []
        elif any(not 0.0 <= r <= 1.0 for r in ok):
            errors.append("penetration_rates: every rate must lie in [0, 1]")
        elif any(b <= a for a, b in zip(ok, ok[1:])):
            errors.append("penetration_rates: must be strictly ascending")
        else:
            rates = ok

    seeds = raw.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds:
        errors.append("seeds: expected a non-empty list of integers")
        seeds = []
    elif any(isinstance(s, bool) or not isinstance(s, int) or s < 0 for s in seeds):
        errors.append("seeds: expected non-negative integers")
    elif len(set(seeds)) != len(seeds):
        errors.append("seeds: duplicates not allowed")

    mode = raw.get("equipage_mode", "nested")
    if mode not in EQUIPAGE_MODES:
        errors.append(f"equipage_mode: must be one of {EQUIPAGE_MODES}")
    variant = raw.get("mtl_variant", "any_vehicle")
    if variant not in MTL_VARIANTS:
        errors.append(f"mtl_variant: must be one of {MTL_VARIANTS}")
    workers = raw.get("workers", 1)
    if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
        errors.append("workers: expected a positive integer")
    out = raw.get("output_dir")
    out = None if out is None else (Path(out) if Path(out).is_absolute() else base / out)

    if errors:
        raise ConfigError(errors)
    return RunConfig(
        scenario=source, safety=safety, sensor_radius=sensor_radius, cpm_interval=interval,
        phase_mode=phase_mode, penetration_rates=tuple(rates), seeds=tuple(seeds),
        equipage_mode=mode, mtl_variant=variant, output_dir=out, workers=workers,
    )


def validate_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError([f"config: cannot read {path}: {exc}"]) from exc
    except yaml.YAMLError as exc:
        raise ConfigError([f"config: not valid YAML/JSON: {exc}"]) from exc
    return config_from_dict(raw or {}, base_dir=path.parent)


# -- sweep -------------------------------------------------------------------------

_CONTEXT: dict | None = None


def _cell(task) -> CellResult:
    rate, seed, equipped, phases = task
    ctx = _CONTEXT
    view, direct, sig = ctx["view"], ctx["direct"], ctx["sig"]
    mask = np.isin(view.agent_ids, np.asarray(sorted(equipped), dtype=np.int64)) & view.is_vehicle
    if ctx["cpm_enabled"]:
        tracked = fuse_from_direct(view, direct, mask, phases, ctx["interval_us"], ctx["frame_rate"])
    else:
        tracked = direct.copy()
    perception = PerceptionMap(view, tracked, frozenset(equipped))
    scenario = ctx["scenario"]
    params = ctx["params"]

    counts = vehicle_risk_summaries(scenario, perception, params, sig=sig)
    risks = frame_risks(perception, params, sig=sig)
    ratios = [(r.frame_index, r.ratio) for r in risks if r.ratio is not None]
    mtls = {v: mtl(scenario, perception, v) for v in MTL_VARIANTS}
    return CellResult(
        rate=rate,
        seed=seed,
        equipped=tuple(equipped),
        vehicle_counts=tuple((c.vehicle_id, c.occluded_interaction_count) for c in counts),
        boxplot=boxplot_stats([c.occluded_interaction_count for c in counts]) if counts else None,
        frame_ratios=tuple(ratios),
        ratio_mean=float(np.mean([r for _, r in ratios])) if ratios else None,
        ratio_max=float(max(r for _, r in ratios)) if ratios else None,
        significant_total=sum(r.significant_interactions for r in risks),
        occluded_total=sum(r.occluded_interactions for r in risks),
        mtl={v: tuple((m.vru_id, m.mtl_frames) for m in ms) for v, ms in mtls.items()},
        ccdf={v: tuple(ccdf([m.mtl_ms for m in ms])) if ms else () for v, ms in mtls.items()},
    )


def equipage_plan(config: RunConfig, vehicle_ids: list[int]) -> list[tuple[float, int, frozenset[int], CpmSchedule]]:
    """(rate, seed, equipped ids, schedule) per sweep cell, all drawn from the config seeds."""
    plan = []
    for seed in sorted(config.seeds):
        equip_seq, phase_seq = np.random.SeedSequence(seed).spawn(2)
        if config.phase_mode == "random":
            schedule = CpmSchedule.random_phases(vehicle_ids, config.cpm_interval, phase_seq)
        else:
            schedule = CpmSchedule(config.cpm_interval)
        if config.equipage_mode == "nested":
            assignments = nested_equipage(vehicle_ids, config.penetration_rates, equip_seq)
        else:
            children = equip_seq.spawn(len(config.penetration_rates))
            assignments = [assign_equipage(vehicle_ids, r, c)
                           for r, c in zip(config.penetration_rates, children)]
        plan += [(a.penetration_rate, seed, a.equipped, schedule) for a in assignments]
    return plan


def run_sweep(config: RunConfig, out_dir=None, workers: int | None = None, *,
              scenario: Scenario | None = None, cpm_enabled: bool = True) -> SweepReport:
    """Sweep every (rate, seed) cell; writes the report when an output directory is known.

    ``cpm_enabled=False`` replaces fusion by plain line of sight, a
    reference path for checking zero-penetration results.
    """
    global _CONTEXT
    if scenario is None:
        scenario = config.scenario.load()
    schedule = CpmSchedule(config.cpm_interval)
    sensing = direct_sensing(scenario, config.sensor_radius, schedule.slot_gap(scenario.frame_rate))
    view = sensing.view
    sig = significance(view, config.safety)
    vehicle_ids = scenario.vehicle_ids

    tasks = []
    for rate, seed, equipped, sched in equipage_plan(config, vehicle_ids):
        phases = np.array([sched.phase_us(int(i)) for i in view.agent_ids], dtype=np.int64)
        tasks.append((rate, seed, equipped, phases))

    _CONTEXT = {
        "scenario": scenario, "view": view, "direct": sensing.direct, "sig": sig,
        "params": config.safety, "interval_us": schedule.interval_us,
        "frame_rate": scenario.frame_rate, "cpm_enabled": cpm_enabled,
    }
    n_workers = workers or config.workers
    try:
        if n_workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(n_workers, mp_context=mp.get_context("fork")) as pool:
                cells = list(pool.map(_cell, tasks))
        else:
            cells = [_cell(t) for t in tasks]
    finally:
        _CONTEXT = None

    report = SweepReport(
        scenario_id=scenario.name,
        config_digest=config.digest(),
        frame_rate=scenario.frame_rate,
        parameters=config.parameters(),
        cells=tuple(cells),
        mtl_variant=config.mtl_variant,
        phase_mode=config.phase_mode,
    )
    target = out_dir if out_dir is not None else config.output_dir
    if target is not None:
        write_report(report, target)
    return report
