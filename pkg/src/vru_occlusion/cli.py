"""Command line: ``run``, ``validate`` and ``synth``.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from .scenario import ScenarioError, SyntheticSpec, generate_synthetic, write_ind_recording
from .sweep import ConfigError, run_sweep, validate_config

EXIT_CONFIG, EXIT_DATA, EXIT_IO = 2, 3, 4

log = logging.getLogger("vru_occlusion")


def _cmd_run(args) -> int:
    config = validate_config(args.config)
    out = Path(args.out) if args.out else config.output_dir
    if out is None:
        raise ConfigError(["output_dir: required (set it in the config or pass --out)"])
    report = run_sweep(config, out_dir=out, workers=args.workers)
    for cell in report.cells:
        box = cell.boxplot
        any_mtl = max((n for _, n in cell.mtl["any_vehicle"]), default=0)
        log.info("rate=%g seed=%d equipped=%d whisker_high=%s occluded=%d max_mtl_frames=%d",
                 cell.rate, cell.seed, len(cell.equipped), box.whisker_high if box else "-",
                 cell.occluded_total, any_mtl)
    log.info("report written to %s", out)
    return 0


def _cmd_validate(args) -> int:
    config = validate_config(args.config)
    print(json.dumps(config.parameters(), indent=1, sort_keys=True))
    return 0


def _cmd_synth(args) -> int:
    try:
        raw = yaml.safe_load(Path(args.spec).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError([f"spec: not valid YAML/JSON: {exc}"]) from exc
    try:
        spec = SyntheticSpec.from_dict(raw or {})
    except (TypeError, KeyError) as exc:
        raise ConfigError([f"spec: {exc}"]) from exc
    scenario = generate_synthetic(spec, args.seed)
    paths = write_ind_recording(scenario, args.out, args.recording_id)
    for p in paths.values():
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vru-occlusion", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="sweep penetration rates and write a report")
    run.add_argument("--config", required=True)
    run.add_argument("--out")
    run.add_argument("--workers", type=int)
    run.set_defaults(func=_cmd_run)

    val = sub.add_parser("validate", help="check a config and print the resolved parameters")
    val.add_argument("--config", required=True)
    val.set_defaults(func=_cmd_validate)

    synth = sub.add_parser("synth", help="emit a synthetic scenario as inD-style CSV files")
    synth.add_argument("--spec", required=True)
    synth.add_argument("--out", required=True)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--recording-id", type=int, default=0)
    synth.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(message)s")
    if getattr(args, "workers", None) is not None and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ScenarioError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
