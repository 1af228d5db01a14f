"""Experiment plumbing: configs, determinism, CLI wiring and exit codes."""

import json
import os
import subprocess
import sys

import pytest

from teichlab.geometry import TeichPoint
from teichlab.experiments import (
    ExperimentConfig,
    axis_gromov_property,
    equidistribution_experiment,
    geodesic_count_experiment,
    orbit_growth_experiment,
    product_structure_test,
    report_criteria_pass,
    write_report,
    write_table_csv,
)

I = TeichPoint(0, 1)


@pytest.fixture(scope="module")
def cfg():
    return ExperimentConfig()


@pytest.fixture(scope="module")
def group(cfg):
    return cfg.group()


def test_config_roundtrip(cfg):
    data = cfg.to_json()
    again = ExperimentConfig.from_json(json.loads(json.dumps(data)))
    assert again.to_json() == data


def test_config_validates_ladder():
    with pytest.raises(ValueError):
        ExperimentConfig(radius_ladder=[3.0, 2.0])
    with pytest.raises(ValueError):
        ExperimentConfig(node_cap=0)


def test_orbit_growth_basics(cfg, group):
    report = orbit_growth_experiment(cfg, group)
    assert 0.3 < report["h"] < 0.6
    assert not report["nonhyperbolic_growth"]
    assert report_criteria_pass(report)
    for entry in report["criteria"]:
        assert "tolerance" in entry  # every verdict cites its tolerance


def test_orbit_growth_flags_cyclic():
    cyclic_cfg = ExperimentConfig(
        generators=[[2, 1, 1, 1]],
        powers=[3],
        radius_ladder=[4.0 * k for k in range(1, 11)],
    )
    report = orbit_growth_experiment(cyclic_cfg)
    assert report["nonhyperbolic_growth"]


def test_product_structure_degenerate_equal_points(cfg, group):
    report = product_structure_test(cfg, I, I, I, TeichPoint(0.3, 1.0), group)
    for row in report["rows"]:
        assert row["ratio"] == pytest.approx(1.0)


def test_geodesic_report_contents(cfg, group):
    report = geodesic_count_experiment(cfg, group, h=0.4241)
    assert report["table"][0]["n"] == 4
    assert report["naive_gap_to_h"] > 0.05  # the naive statistic is reported, not gated


def test_axis_gromov_rows(cfg, group):
    report = axis_gromov_property(cfg, group)
    assert report["worst_slack"] > 0
    for row in report["rows"]:
        # slack equals the translation length exactly in the model
        assert row["slack"] == pytest.approx(row["length"], abs=1e-9)


def test_equidistribution_full_circle_trivial(cfg, group):
    from teichlab.circle import BoundaryArc

    full = [BoundaryArc(0.0, -1e-9)]
    report = equidistribution_experiment(
        cfg, group, arcs_a=full, arcs_b=full, mass_floor_ratio=1e-9
    )
    assert report["worst_deviation"] == 0.0


def test_equidistribution_outside_arcs_below_floor(cfg, group):
    from teichlab.circle import BoundaryArc

    gap_arc = [BoundaryArc(3.5, 5.0)]  # between certificate arcs
    with pytest.raises(Exception):
        equidistribution_experiment(cfg, group, arcs_a=gap_arc, arcs_b=gap_arc)


def test_report_determinism(tmp_path, cfg, group):
    """Identical config implies byte-identical report files."""
    r1 = orbit_growth_experiment(cfg, group)
    r2 = orbit_growth_experiment(cfg, group)
    p1 = write_report(r1, str(tmp_path / "a"), "orbit")
    p2 = write_report(r2, str(tmp_path / "b"), "orbit")
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_csv_writer(tmp_path):
    rows = [{"a": 1, "b": 0.5}, {"a": 2, "b": 0.25}]
    path = write_table_csv(rows, str(tmp_path), "table")
    text = open(path).read().splitlines()
    assert text[0] == "a,b"
    assert text[1] == "1,0.5"


# -- CLI ----------------------------------------------------------------------


def run_cli(args, tmp_path):
    env = dict(os.environ)
    return subprocess.run(
        [sys.executable, "-m", "teichlab.cli", *args, "--out", str(tmp_path)],
        capture_output=True,
        text=True,
        env=env,
        timeout=300,
    )


def test_cli_verify_group(tmp_path):
    result = run_cli(["verify-group", "--no-plots"], tmp_path)
    assert result.returncode == 0
    assert "certificate arcs" in result.stdout
    assert (tmp_path / "verify_group.json").exists()


def test_cli_orbit_count_outputs(tmp_path):
    result = run_cli(["orbit-count"], tmp_path)
    assert result.returncode == 0
    assert (tmp_path / "orbit_counts.csv").exists()
    assert (tmp_path / "orbit_growth.json").exists()
    assert (tmp_path / "orbit_growth.png").exists()  # figures beside the CSV


def test_cli_no_plots(tmp_path):
    result = run_cli(["orbit-count", "--no-plots"], tmp_path)
    assert result.returncode == 0
    assert not (tmp_path / "orbit_growth.png").exists()


def test_cli_cross_ratio(tmp_path):
    result = run_cli(["cross-ratio", "--no-plots"], tmp_path)
    assert result.returncode == 0
    assert "[pass]" in result.stdout


def test_cli_budget_exit_code(tmp_path):
    result = run_cli(["orbit-count", "--budget", "5", "--no-plots"], tmp_path)
    assert result.returncode == 3
    assert "budget exceeded" in result.stderr


def test_cli_nonarith_custom(tmp_path):
    result = run_cli(
        ["nonarith", "--matrices", "[[2,1,1,1],[1,1,1,2]]", "--no-plots"], tmp_path
    )
    assert result.returncode == 0
    assert "DEPENDENT(1,1)" in result.stdout


def test_cli_config_file(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"radius_ladder": [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]}))
    result = run_cli(
        ["orbit-count", "--config", str(cfg_path), "--no-plots"], tmp_path
    )
    # the shallow ladder may honestly miss the stabilization tolerance
    # (exit 2); the point here is that the config file is honored
    assert result.returncode in (0, 2)
    data = json.loads((tmp_path / "orbit_growth.json").read_text())
    assert data["ladder"] == [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]


def test_cli_report_determinism(tmp_path):
    out1 = tmp_path / "r1"
    out2 = tmp_path / "r2"
    for out in (out1, out2):
        result = run_cli(["geodesic-count", "--no-plots"], out)
        assert result.returncode == 0
    b1 = (out1 / "geodesic_count.json").read_bytes()
    b2 = (out2 / "geodesic_count.json").read_bytes()
    assert b1 == b2
