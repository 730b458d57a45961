"""Byte-stable sweep reports: one JSON document plus flat CSV tables.

Every float is held at 6 significant digits from construction onward, so a
report read back from disk compares equal to the one that was written.
"""
from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .metrics import MTL_VARIANTS, BoxplotStats

REPORT_FORMAT = "vru-occlusion-sweep/1"
RISK_STATISTIC = "per_vehicle_occluded_interaction_count"
FILES = ("report.json", "risk_boxplot.csv", "frame_ratio.csv", "mtl_ccdf.csv")


class ReportError(OSError):
    pass


def sig6(x):
    if x is None:
        return None
    return float(f"{float(x):.6g}")


def _fmt(x: float) -> str:
    return repr(sig6(x))


def _box(b: BoxplotStats | None) -> BoxplotStats | None:
    if b is None:
        return None
    vals = {k: sig6(v) for k, v in asdict(b).items() if k != "outliers"}
    return BoxplotStats(**vals, outliers=tuple(sig6(o) for o in b.outliers))


@dataclass(frozen=True)
class CellResult:
    """Metrics of one (penetration rate, seed) cell."""

    rate: float
    seed: int
    equipped: tuple[int, ...]
    vehicle_counts: tuple[tuple[int, int], ...]
    boxplot: BoxplotStats | None
    frame_ratios: tuple[tuple[int, float], ...]
    ratio_mean: float | None
    ratio_max: float | None
    significant_total: int
    occluded_total: int
    mtl: dict[str, tuple[tuple[int, int], ...]]
    ccdf: dict[str, tuple[tuple[float, float], ...]]

    def __post_init__(self):
        object.__setattr__(self, "rate", sig6(self.rate))
        object.__setattr__(self, "equipped", tuple(sorted(int(i) for i in self.equipped)))
        object.__setattr__(self, "vehicle_counts",
                           tuple(sorted((int(v), int(c)) for v, c in self.vehicle_counts)))
        object.__setattr__(self, "boxplot", _box(self.boxplot))
        object.__setattr__(self, "frame_ratios", tuple((int(f), sig6(r)) for f, r in self.frame_ratios))
        object.__setattr__(self, "ratio_mean", sig6(self.ratio_mean))
        object.__setattr__(self, "ratio_max", sig6(self.ratio_max))
        object.__setattr__(self, "mtl", {
            v: tuple(sorted((int(i), int(n)) for i, n in self.mtl.get(v, ()))) for v in MTL_VARIANTS
        })
        object.__setattr__(self, "ccdf", {
            v: tuple((sig6(t), sig6(p)) for t, p in self.ccdf.get(v, ())) for v in MTL_VARIANTS
        })


@dataclass(frozen=True)
class SweepReport:
    scenario_id: str
    config_digest: str
    frame_rate: float
    parameters: dict[str, Any]
    cells: tuple[CellResult, ...]
    mtl_variant: str = "any_vehicle"
    phase_mode: str = "synchronized"
    risk_statistic: str = RISK_STATISTIC
    format: str = field(default=REPORT_FORMAT)

    def __post_init__(self):
        object.__setattr__(self, "frame_rate", sig6(self.frame_rate))
        object.__setattr__(self, "cells", tuple(sorted(self.cells, key=lambda c: (c.rate, c.seed))))

    def cell(self, rate: float, seed: int) -> CellResult:
        for c in self.cells:
            if c.rate == sig6(rate) and c.seed == seed:
                return c
        raise KeyError((rate, seed))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _document(report: SweepReport) -> dict:
    cells = []
    for c in report.cells:
        cells.append({
            "rate": c.rate,
            "seed": c.seed,
            "equipped": list(c.equipped),
            "risk_boxplot": None if c.boxplot is None else {
                **{k: v for k, v in asdict(c.boxplot).items() if k != "outliers"},
                "outliers": list(c.boxplot.outliers),
            },
            "frame_ratio": {"mean": c.ratio_mean, "max": c.ratio_max, "defined_frames": len(c.frame_ratios)},
            "significant_interactions": c.significant_total,
            "occluded_interactions": c.occluded_total,
            "mtl_frames": {v: [list(p) for p in c.mtl[v]] for v in MTL_VARIANTS},
        })
    return {
        "format": report.format,
        "scenario_id": report.scenario_id,
        "config_digest": report.config_digest,
        "frame_rate": report.frame_rate,
        "risk_statistic": report.risk_statistic,
        "mtl_variant": report.mtl_variant,
        "phase_mode": report.phase_mode,
        "parameters": report.parameters,
        "cells": cells,
    }


def render_report(report: SweepReport) -> dict[str, str]:
    """File name -> exact file contents."""
    doc = json.dumps(_document(report), indent=1, sort_keys=True, ensure_ascii=False) + "\n"
    vehicle_rows, ratio_rows, ccdf_rows = [], [], []
    for c in report.cells:
        rate = _fmt(c.rate)
        vehicle_rows += [(rate, c.seed, v, n) for v, n in c.vehicle_counts]
        ratio_rows += [(rate, c.seed, f, _fmt(r)) for f, r in c.frame_ratios]
        for variant in MTL_VARIANTS:
            ccdf_rows += [(rate, c.seed, variant, _fmt(t), _fmt(p)) for t, p in c.ccdf[variant]]
    return {
        "report.json": doc,
        "risk_boxplot.csv": _csv(("rate", "seed", "vehicle_id", "count"), vehicle_rows),
        "frame_ratio.csv": _csv(("rate", "seed", "frame", "ratio"), ratio_rows),
        "mtl_ccdf.csv": _csv(("rate", "seed", "variant", "threshold_ms", "fraction"), ccdf_rows),
    }


def write_report(report: SweepReport, path) -> list[Path]:
    directory = Path(path)
    written = []
    try:
        directory.mkdir(parents=True, exist_ok=True)
        for name, text in render_report(report).items():
            target = directory / name
            with open(target, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            written.append(target)
    except OSError as exc:
        raise ReportError(f"cannot write report to {directory}: {exc}") from exc
    return written


def _read_rows(path: Path) -> list[dict[str, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def read_report(path) -> SweepReport:
    directory = Path(path)
    try:
        with open(directory / "report.json", encoding="utf-8") as fh:
            doc = json.load(fh)
        vehicles = _read_rows(directory / "risk_boxplot.csv")
        ratios = _read_rows(directory / "frame_ratio.csv")
        ccdfs = _read_rows(directory / "mtl_ccdf.csv")
    except OSError as exc:
        raise ReportError(f"cannot read report from {directory}: {exc}") from exc

    def grouped(rows):
        out = defaultdict(list)
        for r in rows:
            out[(float(r["rate"]), int(r["seed"]))].append(r)
        return out

    vehicles, ratios, ccdfs = grouped(vehicles), grouped(ratios), grouped(ccdfs)
    cells = []
    for c in doc["cells"]:
        k = (c["rate"], c["seed"])
        box = c["risk_boxplot"]
        cells.append(CellResult(
            rate=c["rate"],
            seed=c["seed"],
            equipped=tuple(c["equipped"]),
            vehicle_counts=tuple((int(r["vehicle_id"]), int(r["count"])) for r in vehicles[k]),
            boxplot=None if box is None else BoxplotStats(
                **{n: box[n] for n in ("min", "q1", "median", "q3", "max", "whisker_low", "whisker_high")},
                outliers=tuple(box["outliers"]),
            ),
            frame_ratios=tuple((int(r["frame"]), float(r["ratio"])) for r in ratios[k]),
            ratio_mean=c["frame_ratio"]["mean"],
            ratio_max=c["frame_ratio"]["max"],
            significant_total=c["significant_interactions"],
            occluded_total=c["occluded_interactions"],
            mtl={v: tuple(tuple(p) for p in c["mtl_frames"][v]) for v in MTL_VARIANTS},
            ccdf={v: tuple((float(r["threshold_ms"]), float(r["fraction"]))
                           for r in ccdfs[k] if r["variant"] == v) for v in MTL_VARIANTS},
        ))
    return SweepReport(
        scenario_id=doc["scenario_id"],
        config_digest=doc["config_digest"],
        frame_rate=doc["frame_rate"],
        parameters=doc["parameters"],
        cells=tuple(cells),
        mtl_variant=doc["mtl_variant"],
        phase_mode=doc["phase_mode"],
        risk_statistic=doc["risk_statistic"],
        format=doc["format"],
    )
