"""Config parsing, file formats and the command line."""

import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bohmlab.cli import main, run
from bohmlab.config import config_from_text, config_to_text, parse_config, write_config
from bohmlab.errors import InvalidConfigError
from bohmlab.io import (UnknownSeriesError, config_hash, export_plot_series, read_snapshot,
                        sha256_file, write_outputs)
from bohmlab.scenarios import SCENARIOS, ScenarioConfig, run_scenario

STATIONARY = """\
[run]
scenario = stationary_well

[system]
n = 2

[ensemble]
n_traj = 40
seed = 3
"""

finite = dict(allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(scenario=st.sampled_from(SCENARIOS),
       epsilon=st.one_of(st.none(), st.floats(-5, 5, **finite)),
       x0=st.floats(0.01, 0.99, **finite),
       sigma_X=st.floats(0.1, 10, **finite),
       n_points=st.one_of(st.none(), st.integers(16, 4096)),
       seed=st.integers(0, 2 ** 31),
       cross_check=st.booleans(),
       T_list=st.lists(st.floats(0.1, 100, **finite), min_size=1, max_size=5))
def test_config_round_trip(scenario, epsilon, x0, sigma_X, n_points, seed, cross_check, T_list):
    cfg = ScenarioConfig(scenario, epsilon=epsilon, x0=x0, sigma_X=sigma_X, n_points=n_points,
                         seed=seed, cross_check=cross_check,
                         T_list=tuple(sorted(T_list, reverse=True)))
    assert config_from_text(config_to_text(cfg)) == cfg


def test_file_round_trip(tmp_path):
    cfg = ScenarioConfig("von_neumann", branch_values=(1.0, 0.0, -1.0),
                         branch_weights=(0.25, 0.25, 0.5), dt=1e-3)
    path = write_config(cfg, tmp_path / "vn.ini")
    assert parse_config(path) == cfg


def test_unknown_key_names_its_path():
    with pytest.raises(InvalidConfigError, match=r"coupling\.epsilonn: unknown key"):
        config_from_text("[run]\nscenario = protective\n[coupling]\nepsilonn = 0.1\n")


def test_missing_scenario_and_bad_values():
    with pytest.raises(InvalidConfigError, match=r"run\.scenario"):
        config_from_text("[coupling]\nepsilon = 0.1\n")
    with pytest.raises(InvalidConfigError, match=r"system\.x0"):
        config_from_text("[run]\nscenario = protective\n[system]\nx0 = 2.0\n")
    with pytest.raises(InvalidConfigError):
        config_from_text("[run]\nscenario = protective\n[grid]\nn_points = many\n")
    with pytest.raises(InvalidConfigError):
        config_from_text("[run]\nscenario = protective\n[bogus]\nkey = 1\n")


def test_negative_coupling_is_accepted():
    cfg = config_from_text("[run]\nscenario = protective\n[coupling]\nepsilon = -0.1\n")
    assert cfg.epsilon == -0.1


def test_cli_scenario_must_agree_with_subcommand(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text(STATIONARY)
    assert parse_config(path, "stationary_well").scenario == "stationary_well"
    with pytest.raises(InvalidConfigError):
        parse_config(path, "protective")


def test_csv_uses_twelve_significant_digits(tmp_path):
    rep = run_scenario(config_from_text(STATIONARY))
    path = export_plot_series(rep, "fields", tmp_path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# series: fields"
    assert any(line.startswith("# config_sha256: " + config_hash(rep.config)) for line in lines)
    data = [ln for ln in lines if not ln.startswith("#")][1:]
    for cell in data[len(data) // 2].split(","):
        digits = cell.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
        assert len(digits) <= 12
    with pytest.raises(UnknownSeriesError):
        export_plot_series(rep, "nope", tmp_path)


def test_snapshot_round_trip(tmp_path):
    rep = run_scenario(replace(config_from_text(STATIONARY), snapshots=3))
    files = write_outputs(rep, tmp_path)
    assert len(rep.snapshots) == 3
    values, meta = read_snapshot(tmp_path / "snapshot_002.bin")
    assert np.array_equal(values, rep.snapshots[-1].values)
    assert meta["time"] == rep.snapshots[-1].time
    assert {f.name for f in files} >= {"report.json", "scalars.csv", "trajectories.csv",
                                        "final_positions.csv", "fields.csv"}


def _write(tmp_path, text=STATIONARY):
    path = tmp_path / "cfg.ini"
    path.write_text(text)
    return path


def test_cli_success_writes_manifest_with_checksums(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["stationary", "--config", str(_write(tmp_path)), "--out", str(out),
                 "--seed", "5"])
    assert code == 0
    assert "PASS" in capsys.readouterr().out
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 5 and manifest["passed"] is True
    for entry in manifest["files"]:
        assert sha256_file(out / entry["file"]) == entry["sha256"]
    assert not (out / "error.json").exists()
    assert not [p for p in out.iterdir() if p.name.startswith(".bohmlab-")]


def test_cli_error_leaves_only_error_record(tmp_path):
    out = tmp_path / "out"
    bad = _write(tmp_path, STATIONARY + "\n[coupling]\nepsilonn = 1\n")
    assert run("stationary", bad, out) == 2
    assert [p.name for p in out.iterdir()] == ["error.json"]
    record = json.loads((out / "error.json").read_text())
    assert record["kind"] == "invalid-config" and "epsilonn" in record["message"]


def test_cli_failed_assertions_exit_one(tmp_path):
    # on 20 nodes the discrete n = 2 level sits about 1% below E_2
    cfg = STATIONARY + "\n[grid]\nn_points = 20\n"
    assert run("stationary", _write(tmp_path, cfg), tmp_path / "out") == 1
    assert (tmp_path / "out" / "manifest.json").exists()


def test_cli_rejects_negative_snapshot_override(tmp_path):
    assert run("stationary", _write(tmp_path), tmp_path / "out", snapshots=-1) == 2


def test_cli_resolution_error(tmp_path):
    cfg = STATIONARY.replace("n = 2", "n = 5") + "\n[grid]\nn_points = 16\n"
    assert run("stationary", _write(tmp_path, cfg), tmp_path / "out") == 2
    record = json.loads((tmp_path / "out" / "error.json").read_text())
    assert record["kind"] == "resolution"


def test_cli_reruns_are_byte_identical(tmp_path):
    cfg = _write(tmp_path)
    for name in ("a", "b"):
        assert run("stationary", cfg, tmp_path / name, seed=11) == 0
    for name in ("scalars.csv", "trajectories.csv", "final_positions.csv", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
