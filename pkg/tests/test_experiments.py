import json

import numpy as np
import pytest

from csmag.errors import ConfigurationError, FormatError
from csmag.experiments import (
    ExperimentConfig,
    RunManifest,
    fit_levels,
    replay,
    run_dynamic_range,
    run_levels,
    run_multi_frequency,
    run_single_frequency,
    sweep_configs,
)
from csmag.sensing import build_schedule
from csmag.signal_model import LarmorComponent, LarmorConfig, multi_frequency_fixture, single_frequency_fixture


def small_single(tmp_path, **kw):
    opts = dict(max_level=4, trials=3, master_seed=7, output_dir=tmp_path / "run")
    opts.update(kw)
    return ExperimentConfig(single_frequency_fixture(5, 64, 0.5), **opts)


def test_single_run_outputs(tmp_path):
    cfg = small_single(tmp_path)
    m = run_single_frequency(cfg)
    out = cfg.output_dir
    for name in m.files.values():
        assert (out / name).exists()
    assert [lvl["n_k"] for lvl in m.levels] == list(build_schedule(64, 4).levels)
    if "scaling_csv" in m.files:
        rows = (out / m.files["scaling_csv"]).read_text().splitlines()
        assert len(rows) == 1 + 5
    phase = (out / m.files["phase_csv"]).read_text().splitlines()
    assert len(phase) == 1 + 5 * (64 // 2 + 1)
    saved = json.loads((out / "single_manifest.json").read_text())
    assert saved["config"]["signal"] == cfg.signal.to_dict()


def test_same_seed_byte_identical(tmp_path):
    a = run_single_frequency(small_single(tmp_path, output_dir=tmp_path / "a"))
    b = run_single_frequency(small_single(tmp_path, output_dir=tmp_path / "b"))
    for name in a.files.values():
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_workers_do_not_change_results(tmp_path):
    a = run_levels(small_single(tmp_path, trials=2))
    b = run_levels(small_single(tmp_path, trials=2, workers=2))
    assert [r.point for r in a] == [r.point for r in b]


def test_replay(tmp_path):
    cfg = small_single(tmp_path)
    run_single_frequency(cfg)
    _, matches = replay(cfg.output_dir / "single_manifest.json", tmp_path / "again")
    assert matches and all(matches.values())


def test_full_sampling_only_edge(tmp_path):
    cfg = small_single(tmp_path, max_level=0, trials=1)
    results = run_levels(cfg)
    assert len(results) == 1 and results[0].n_k == 64
    assert results[0].outcomes[0].relative_error < 1e-9
    assert results[0].exact
    m = run_single_frequency(cfg)
    assert m.results["fit_error"] is not None
    assert "phase_csv" in m.files


def test_single_run_requires_one_component(tmp_path):
    cfg = ExperimentConfig(multi_frequency_fixture((3, 9), 64), max_level=2, trials=1,
                           output_dir=tmp_path)
    with pytest.raises(ConfigurationError):
        run_single_frequency(cfg)


def test_multi_run_rejects_single(tmp_path):
    with pytest.raises(ConfigurationError):
        run_multi_frequency(small_single(tmp_path))


def test_duplicate_bins_rejected():
    with pytest.raises(ConfigurationError):
        LarmorConfig((LarmorComponent(10), LarmorComponent(10)), 600)


def test_multi_run_peaks(tmp_path):
    cfg = ExperimentConfig(multi_frequency_fixture((3, 9, 20), 64, 0.5), max_level=3, trials=2,
                           output_dir=tmp_path)
    m = run_multi_frequency(cfg)
    assert m.results["detected_bins"] == [3, 9, 20]
    assert m.results["peaks_match"]


def test_sweep_configs_keep_record_time(tmp_path):
    cfgs = sweep_configs(small_single(tmp_path), [0.5, 0.25, 0.125], [4, 5, 6])
    assert [c.signal.n_points for c in cfgs] == [64, 128, 256]
    assert {c.signal.n_points * c.signal.tau0 for c in cfgs} == {32.0}
    assert all(c.signal.bins == [5] for c in cfgs)
    assert len({c.stream for c in cfgs}) == 3
    with pytest.raises(ConfigurationError):
        sweep_configs(small_single(tmp_path), [0.5], [4, 5])
    with pytest.raises(ConfigurationError):
        sweep_configs(small_single(tmp_path), [-0.5], [4])


def test_dynamic_range_single_point(tmp_path):
    m = run_dynamic_range(small_single(tmp_path, trials=2), [0.5], [4])
    rows = (tmp_path / "run" / "sweep.csv").read_text().splitlines()
    assert len(rows) == 2
    assert np.isfinite(m.results["gain"])
    assert len(m.results["ratios"]) == 1


def test_dynamic_range_deterministic(tmp_path):
    a = run_dynamic_range(small_single(tmp_path, trials=2, output_dir=tmp_path / "a"), [0.25, 0.5], [5, 4])
    b = run_dynamic_range(small_single(tmp_path, trials=2, output_dir=tmp_path / "b"), [0.25, 0.5], [5, 4])
    assert a.file_hashes == b.file_hashes
    assert (tmp_path / "a" / "sweep.csv").read_bytes() == (tmp_path / "b" / "sweep.csv").read_bytes()


def test_fit_levels_skip_exact_and_unconverged(tmp_path):
    results = run_levels(small_single(tmp_path))
    chosen = fit_levels(results)
    for r in results:
        if r.level in chosen:
            assert r.converged_fraction == 1 and not r.exact
    assert results[-1].level not in chosen  # n_k = N is solved exactly


def test_manifest_load_error(tmp_path):
    path = tmp_path / "m.json"
    path.write_text("{}")
    with pytest.raises(FormatError):
        RunManifest.load(path)
