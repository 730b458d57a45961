"""Penetration-rate trend check on inD recordings (Frankenburg and Neukoellner Strasse).

The recordings are licensed separately and are not shipped.  Point the check
at an extracted ``data`` directory:

    python3 scripts/ind_trend_check.py --data /path/to/inD/data \
        --scenario1 18 --scenario2 30 --seeds 0 1 2 3 4

Checks per scenario:
  * upper whisker of per-vehicle risk at 25% is at least 40% below 0%
  * upper whisker at 100% is 0
  * longest tracking loss without communication near the expected value
    (8 s for scenario 1, 4 s for scenario 2) within +-25%
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from vru_occlusion.metrics import boxplot_stats
from vru_occlusion.sweep import RunConfig, ScenarioSource, run_sweep

RATES = (0.0, 0.25, 0.5, 0.75, 1.0)
EXPECTED_MTL_S = {"scenario1": 8.0, "scenario2": 4.0}
DEFAULT_RECORDINGS = {"scenario1": ("18",), "scenario2": ("30",)}


@dataclass(frozen=True)
class Check:
    scenario: str
    name: str
    ok: bool
    detail: str


def recording_source(data_dir: Path, rec: str) -> ScenarioSource:
    rec = f"{int(rec):02d}"
    return ScenarioSource("ind", f"{rec}_tracks", tracks=data_dir / f"{rec}_tracks.csv",
                          tracks_meta=data_dir / f"{rec}_tracksMeta.csv",
                          recording_meta=data_dir / f"{rec}_recordingMeta.csv")


def recordings_present(data_dir: Path, recordings) -> bool:
    for rec in recordings:
        src = recording_source(data_dir, rec)
        if not all(p.exists() for p in (src.tracks, src.tracks_meta, src.recording_meta)):
            return False
    return True


def scenario_checks(label: str, data_dir: Path, recordings, seeds, expected_mtl_s: float,
                    workers: int = 1) -> list[Check]:
    counts = {r: [] for r in RATES}  # pooled over recordings, seeds and vehicles
    mtl0_ms = 0.0
    for rec in recordings:
        config = RunConfig(recording_source(data_dir, rec), penetration_rates=RATES, seeds=tuple(seeds))
        report = run_sweep(config, workers=workers)
        for cell in report.cells:
            counts[cell.rate] += [n for _, n in cell.vehicle_counts]
            if cell.rate == 0.0:
                frames = max((n for _, n in cell.mtl["any_vehicle"]), default=0)
                mtl0_ms = max(mtl0_ms, frames * 1000.0 / report.frame_rate)
    w0 = boxplot_stats(counts[0.0]).whisker_high
    w25 = boxplot_stats(counts[0.25]).whisker_high
    w100 = boxplot_stats(counts[1.0]).whisker_high
    drop = 1.0 - w25 / w0 if w0 > 0 else 0.0
    mtl_s = mtl0_ms / 1000.0
    return [
        Check(label, "whisker drop at 25%", w0 > 0 and drop >= 0.40, f"{w0:g} -> {w25:g} ({drop:.0%})"),
        Check(label, "whisker at 100% is 0", w100 == 0, f"{w100:g}"),
        Check(label, "no-communication max MTL", abs(mtl_s - expected_mtl_s) <= 0.25 * expected_mtl_s,
              f"{mtl_s:.2f} s vs {expected_mtl_s:g} s"),
    ]


def recordings_from_env() -> tuple[Path | None, dict[str, tuple[str, ...]]]:
    data = os.environ.get("VRU_OCCLUSION_IND_DIR")
    recs = {}
    for label, default in DEFAULT_RECORDINGS.items():
        raw = os.environ.get(f"VRU_OCCLUSION_IND_{label.upper()}")
        recs[label] = tuple(raw.replace(",", " ").split()) if raw else default
    return (Path(data) if data else None), recs


def main(argv=None) -> int:
    env_dir, env_recs = recordings_from_env()
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", type=Path, default=env_dir, help="inD data directory")
    ap.add_argument("--scenario1", nargs="+", default=list(env_recs["scenario1"]))
    ap.add_argument("--scenario2", nargs="+", default=list(env_recs["scenario2"]))
    ap.add_argument("--seeds", nargs="+", type=int, default=[0, 1, 2, 3, 4])
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)
    if args.data is None:
        ap.error("--data (or VRU_OCCLUSION_IND_DIR) is required")
    failed = False
    for label, recs in (("scenario1", args.scenario1), ("scenario2", args.scenario2)):
        if not recordings_present(args.data, recs):
            print(f"SKIP  {label}: recordings {recs} not found in {args.data}")
            continue
        for c in scenario_checks(label, args.data, recs, args.seeds, EXPECTED_MTL_S[label], args.workers):
            failed |= not c.ok
            print(f"{'PASS' if c.ok else 'FAIL'}  {c.scenario}: {c.name}  ({c.detail})")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
