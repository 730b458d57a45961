import csv
import dataclasses

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vru_occlusion import Scenario, four_way_intersection
from vru_occlusion.reporting import FILES, ReportError, read_report, render_report, sig6, write_report
from vru_occlusion.sweep import config_from_dict, run_sweep

SPEC = four_way_intersection(60, moving_vehicles=8, parked_vehicles=6, pedestrians=8, respawn=True).to_dict()


def config(**overrides):
    raw = {"scenario": {"synthetic": SPEC, "seed": 3, "name": "tiny"}, "penetration_rates": [0.0, 0.5],
           "seeds": [0]}
    raw.update(overrides)
    return config_from_dict(raw)


@pytest.fixture(scope="module")
def report():
    return run_sweep(config())


def test_empty_scenario_gives_header_only_tables(tmp_path):
    rep = run_sweep(config(), scenario=Scenario((), 25.0))
    write_report(rep, tmp_path)
    assert (tmp_path / "risk_boxplot.csv").read_text() == "rate,seed,vehicle_id,count\n"
    assert (tmp_path / "frame_ratio.csv").read_text() == "rate,seed,frame,ratio\n"
    assert (tmp_path / "mtl_ccdf.csv").read_text() == "rate,seed,variant,threshold_ms,fraction\n"
    assert read_report(tmp_path) == rep


def test_write_twice_is_byte_identical(report, tmp_path):
    write_report(report, tmp_path / "a")
    write_report(report, tmp_path / "b")
    for name in FILES:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_rows_grouped_by_rate_then_seed(tmp_path):
    rep = run_sweep(config(penetration_rates=[0.25, 0.75], seeds=[5, 1]))
    write_report(rep, tmp_path)
    with open(tmp_path / "risk_boxplot.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    keys = [(float(r["rate"]), int(r["seed"]), int(r["vehicle_id"])) for r in rows]
    assert keys == sorted(keys)
    assert {k[0] for k in keys} == {0.25, 0.75}


def test_files_use_lf_and_utf8(report, tmp_path):
    write_report(report, tmp_path)
    for name in FILES:
        raw = (tmp_path / name).read_bytes()
        assert b"\r" not in raw
        raw.decode("utf-8")


def test_round_trip(report, tmp_path):
    write_report(report, tmp_path)
    back = read_report(tmp_path)
    assert back == report
    assert render_report(back) == render_report(report)


def test_report_embeds_parameters(report):
    assert report.parameters == config().parameters()
    assert report.config_digest == config().digest()
    assert report.risk_statistic == "per_vehicle_occluded_interaction_count"
    assert report.cell(0.5, 0).equipped


def test_digest_tracks_effective_parameters():
    base = config()
    assert config().digest() == base.digest()
    changed = [
        config(seeds=[1]), config(penetration_rates=[0.0, 0.25]), config(sensor_radius=70.0),
        config(safety={"t_react": 1.4}), config(safety={"wedge_apex_angle_deg": 50}),
        config(cpm={"interval": 0.2}), config(cpm={"phase_mode": "random"}),
        config(equipage_mode="independent"), config(mtl_variant="per_vehicle_max"),
        config(scenario={"synthetic": SPEC, "seed": 4, "name": "tiny"}),
    ]
    digests = {c.digest() for c in changed}
    assert len(digests) == len(changed) and base.digest() not in digests
    # output location and worker count do not change results
    assert config(workers=3, output_dir="elsewhere").digest() == base.digest()


def test_unwritable_target_raises_with_path(report, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ReportError, match="file"):
        write_report(report, blocker / "sub")
    with pytest.raises(ReportError):
        read_report(tmp_path / "missing")


def test_cells_hold_six_significant_digits(report):
    cell = report.cell(0.5, 0)
    for _, r in cell.frame_ratios:
        assert r == sig6(r)
    again = dataclasses.replace(cell, ratio_mean=1 / 3)
    assert again.ratio_mean == 0.333333


@given(st.floats(allow_nan=False, allow_infinity=False, width=64))
def test_sig6_is_idempotent(x):
    assert sig6(sig6(x)) == sig6(x)
    assert float(repr(sig6(x))) == sig6(x)
