import importlib.util
import sys
from pathlib import Path

import yaml

from vru_occlusion import four_way_intersection, generate_synthetic, write_ind_recording

ROOT = Path(__file__).resolve().parent.parent


def load_script(name):
    spec = importlib.util.spec_from_file_location(name, ROOT / "scripts" / f"{name}.py")
    module = importlib.util.module_from_spec(spec)
    sys.modules[name] = module
    spec.loader.exec_module(module)
    return module


def test_example_configs_validate():
    from vru_occlusion.sweep import validate_config

    cfg = validate_config(ROOT / "scripts" / "configs" / "demo.yaml")
    assert cfg.scenario.synthetic.duration_frames == 1500
    ind = validate_config(ROOT / "scripts" / "configs" / "ind_example.yaml")
    assert ind.scenario.kind == "ind" and len(ind.seeds) == 5


def test_benchmark_runs_short(capsys):
    load_script("benchmark").main(["--frames", "200"])
    out = capsys.readouterr().out
    assert "sweep of 15 cells" in out


def test_demo_sweep_prints_one_row_per_rate(tmp_path, capsys):
    spec = four_way_intersection(100, moving_vehicles=6, parked_vehicles=8, pedestrians=6, respawn=True)
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump({"scenario": {"synthetic": spec.to_dict()}, "seeds": [0, 1]}))
    load_script("demo_sweep").main(["--config", str(cfg), "--out", str(tmp_path / "out")])
    lines = capsys.readouterr().out.splitlines()
    table = lines[lines.index(next(l for l in lines if l.strip().startswith("rate"))) + 1:][:5]
    assert [float(l.split()[0]) for l in table] == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert (tmp_path / "out" / "report.json").exists()


def test_trend_check_on_synthetic_recordings(tmp_path, capsys):
    trend = load_script("ind_trend_check")
    for rec, seed in ((18, 1), (30, 2)):
        sc = generate_synthetic(four_way_intersection(150, moving_vehicles=6, parked_vehicles=12, pedestrians=8,
                                                      respawn=True), seed)
        write_ind_recording(sc, tmp_path, recording_id=rec)
    checks = trend.scenario_checks("scenario1", tmp_path, ["18"], [0, 1], 8.0)
    assert [c.name for c in checks] == ["whisker drop at 25%", "whisker at 100% is 0", "no-communication max MTL"]
    code = trend.main(["--data", str(tmp_path), "--seeds", "0"])
    out = capsys.readouterr().out
    assert code in (0, 1) and out.count("scenario2:") == 3
    assert trend.main(["--data", str(tmp_path / "none")]) == 0
    assert capsys.readouterr().out.count("SKIP") == 2
