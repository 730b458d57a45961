"""Run a penetration-rate sweep and print a per-rate summary.

    python3 scripts/demo_sweep.py                      # synthetic demo config
    python3 scripts/demo_sweep.py --config my.yaml --out out/my_run
"""
from __future__ import annotations

import argparse
from collections import defaultdict
from pathlib import Path

import numpy as np

from vru_occlusion.metrics import boxplot_stats
from vru_occlusion.sweep import run_sweep, validate_config

HERE = Path(__file__).resolve().parent


def summarize(report) -> list[str]:
    by_rate = defaultdict(list)
    for cell in report.cells:
        by_rate[cell.rate].append(cell)
    lines = [f"{'rate':>5}  {'whisker':>8}  {'median':>7}  {'occluded':>9}  {'ratio':>6}  "
             f"{'max MTL ms':>10}  {'p90 MTL ms':>10}"]
    for rate, cells in sorted(by_rate.items()):
        counts = [n for c in cells for _, n in c.vehicle_counts]
        box = boxplot_stats(counts) if counts else None
        mtl_ms = [n * 1000.0 / report.frame_rate for c in cells for _, n in c.mtl[report.mtl_variant]]
        ratios = [c.ratio_mean for c in cells if c.ratio_mean is not None]
        lines.append(
            f"{rate:>5g}  {box.whisker_high if box else 0:>8g}  {box.median if box else 0:>7g}  "
            f"{sum(c.occluded_total for c in cells):>9d}  {np.mean(ratios) if ratios else 0:>6.3f}  "
            f"{max(mtl_ms, default=0):>10.0f}  {np.percentile(mtl_ms, 90) if mtl_ms else 0:>10.0f}"
        )
    return lines


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, default=HERE / "configs" / "demo.yaml")
    ap.add_argument("--out", type=Path, default=None, help="report directory (default: from the config)")
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args(argv)

    config = validate_config(args.config)
    report = run_sweep(config, out_dir=args.out, workers=args.workers)
    print(f"scenario {report.scenario_id}, {len(report.cells)} cells, seeds {list(config.seeds)}")
    print(f"per-vehicle statistic: {report.risk_statistic}; MTL variant: {report.mtl_variant}")
    for line in summarize(report):
        print(line)
    target = args.out or config.output_dir
    if target is not None:
        print(f"report written to {target}")


if __name__ == "__main__":
    main()
