import json

import pytest

from csmag.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, fixture_path, main
from csmag.signal_model import LarmorConfig


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "sig.json"
    path.write_text(json.dumps({"n_points": 64, "tau0": 0.5,
                                "components": [{"omega_bin": 5, "amplitude": 1.0, "phase_offset": 0.0}]}))
    return path


def test_bundled_fixtures():
    single = LarmorConfig.load(fixture_path("single_freq.json"))
    multi = LarmorConfig.load(fixture_path("multi_freq.json"))
    assert single.bins == [10] and single.n_points == 600
    assert multi.bins == [10, 37, 83] and multi.n_points == 600


def test_synth(tmp_path, small_config):
    assert main(["synth", "--config", str(small_config), "--out", str(tmp_path)]) == EXIT_OK
    assert len((tmp_path / "signal.csv").read_text().splitlines()) == 65
    assert (tmp_path / "spectrum.csv").read_text().startswith("bin,re,im,magnitude")


def test_recover_and_replay(tmp_path, small_config, capsys):
    out = tmp_path / "r"
    assert main(["recover", "--config", str(small_config), "--levels", "3", "--level", "2",
                 "--out", str(out)]) == EXIT_OK
    assert main(["recover", "--problem", str(out / "problem.json"), "--expect",
                 str(out / "recovery.json"), "--out", str(tmp_path / "r2")]) == EXIT_OK
    assert "replay match" in capsys.readouterr().out


def test_scale_and_plot_and_replay(tmp_path, small_config):
    out = tmp_path / "s"
    args = ["scale", "--config", str(small_config), "--levels", "4", "--trials", "2", "--out", str(out)]
    assert main(args) == EXIT_OK
    manifest = json.loads((out / "single_manifest.json").read_text())
    assert (out / manifest["files"]["phase_csv"]).exists()
    assert main(["plot", str(out / "single_phase.csv"), "--kind", "phase",
                 "--svg", str(tmp_path / "p.svg")]) == EXIT_OK
    assert main(["replay", str(out / "single_manifest.json"), "--out", str(tmp_path / "again")]) == EXIT_OK


def test_scale_multi(tmp_path):
    cfg = tmp_path / "m.json"
    cfg.write_text(json.dumps({"n_points": 64, "tau0": 0.5, "components": [
        {"omega_bin": 3}, {"omega_bin": 11}]}))
    assert main(["scale-multi", "--config", str(cfg), "--levels", "3", "--trials", "1",
                 "--out", str(tmp_path / "o")]) == EXIT_OK


def test_sweep_cli(tmp_path, small_config):
    assert main(["sweep", "--config", str(small_config), "--levels", "3", "--trials", "1",
                 "--tau0", "0.25", "0.5", "--k-values", "4", "3", "--out", str(tmp_path)]) == EXIT_OK
    assert len((tmp_path / "sweep.csv").read_text().splitlines()) == 3


def test_config_errors(tmp_path):
    bad = tmp_path / "dup.json"
    bad.write_text(json.dumps({"n_points": 64, "components": [{"omega_bin": 3}, {"omega_bin": 3}]}))
    assert main(["scale", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["sweep", "--tau0", "0.1", "--k-values", "1", "2", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["scale", "--trials", "0", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_io_errors(tmp_path):
    assert main(["scale", "--config", str(tmp_path / "missing.json")]) == EXIT_IO
    empty = tmp_path / "e.csv"
    empty.write_text("tau0,inv_tau0,delta_b_cs,delta_b_std\n")
    assert main(["plot", str(empty), "--kind", "sweep"]) == EXIT_IO
