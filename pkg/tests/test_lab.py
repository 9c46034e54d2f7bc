import json
import math

import numpy as np
import pytest

from dampedmaps.exceptions import (
    Aliasing,
    BadParameter,
    BadScaling,
    BoxTooSmall,
    ConfigError,
    InsufficientData,
    NotQuantizable,
    StageFailure,
)
from dampedmaps.lab import pipelines
from dampedmaps.lab.cli import build_parser, load_config, main
from dampedmaps.lab.experiment import CLASSICAL_STAGES, ExperimentConfig
from dampedmaps.lab.manifest import (
    STATUS_CACHED,
    STATUS_FAILED,
    STATUS_OK,
    RunManifest,
    read_csv,
    read_json,
    sha256_file,
    to_builtin,
    write_csv,
)
from dampedmaps.lab.pipelines import resolve_stages, run_classical, run_full, run_quantum
from dampedmaps.models.observables import TorusObservable
from dampedmaps.operations.statistics import bound_value

SMALL = {
    "N_list": [32, 64, 128],
    "T_list": [8, 16, 32],
    "epsilon_grid": [0.5],
    "samples": 2000,
    "variance_T": 8,
    "xi_grid": [-0.2, -0.1, 0.0, 0.1, 0.2],
    "K_op": 8,
    "eta_points": 11,
}


def small_config(tmp_path, **fields):
    return ExperimentConfig.from_dict({**SMALL, "output_dir": str(tmp_path), **fields})


def write_config(tmp_path, **fields):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({**SMALL, **fields}), encoding="utf-8")
    return path


def test_digest_ignores_runtime_fields(tmp_path):
    config = small_config(tmp_path)
    other = small_config(tmp_path / "elsewhere", jobs=4)
    assert config.digest() == other.digest()
    assert small_config(tmp_path, stages=["variance"]).digest() == config.digest()
    assert config.digest() != small_config(tmp_path, seed=1).digest()
    assert json.loads(config.canonical())["seed"] == 0


def test_unknown_field():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"samplez": 10})


def test_from_file_overrides(tmp_path, monkeypatch):
    path = write_config(tmp_path, seed=3)
    monkeypatch.setenv("OUTPUT_DIR", str(tmp_path / "env"))
    config = ExperimentConfig.from_file(path, jobs=2, seed=None)
    assert config.seed == 3
    assert config.jobs == 2
    assert config.output_dir == str(tmp_path / "env")
    assert ExperimentConfig.from_file(path, output_dir="flag").output_dir == "flag"


def test_environment_output_dir_without_config_file(tmp_path, monkeypatch):
    monkeypatch.setenv("OUTPUT_DIR", str(tmp_path / "env"))
    config = load_config(build_parser().parse_args(["validate", "--seed", "5"]))
    assert config.output_dir == str(tmp_path / "env")
    assert config.seed == 5
    flagged = load_config(build_parser().parse_args(["validate", "--out", "flag"]))
    assert flagged.output_dir == "flag"


def test_from_file_rejects_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_file(path)


@pytest.mark.parametrize(
    "fields,error",
    [
        ({"gamma": 0.6}, BadScaling),
        ({"N_list": [32, 64]}, BadParameter),
        ({"N_list": [33, 64, 128]}, NotQuantizable),
        ({"N_list": [8, 16, 32]}, Aliasing),
        ({"K_op": 1}, BoxTooSmall),
        ({"T_list": [8, 16]}, InsufficientData),
        ({"stages": ["variance", "unknown"]}, ConfigError),
        ({"backend": "fortran"}, BadParameter),
        ({"map": [2, 1, 1, 2]}, ValueError),
    ],
)
def test_validation_errors(tmp_path, fields, error):
    with pytest.raises(error):
        small_config(tmp_path, **fields).validate()


def test_resolve_stages():
    assert resolve_stages(["gartner_ellis"], CLASSICAL_STAGES) == [
        "variance",
        "mdp",
        "pressure",
        "rate",
        "gartner_ellis",
    ]
    assert resolve_stages(["constant"], CLASSICAL_STAGES) == ["variance", "constant"]


def test_csv_and_json_writers(tmp_path):
    path = write_csv(tmp_path / "t.csv", ("a", "b"), [(np.float64(0.1), None), (3, True)])
    assert path.read_text(encoding="utf-8").splitlines() == ["a,b", "0.1,", "3,True"]
    assert to_builtin({"x": math.inf, "y": (np.int64(2), np.float64(0.5))}) == {
        "x": None,
        "y": [2, 0.5],
    }


def test_run_classical(tmp_path):
    config = small_config(tmp_path)
    manifest = run_classical(config)
    assert set(manifest.stage_status) == set(CLASSICAL_STAGES)
    assert set(manifest.stage_status.values()) == {STATUS_OK}
    assert manifest.summary["sigma_sq_exact"] == pytest.approx(0.5)
    assert manifest.summary["c"] == pytest.approx(1.0390434606, abs=1e-8)
    assert not manifest.summary["c_infinite"]
    assert manifest.rng == "Philox"
    assert manifest.verify()

    directory = tmp_path / "cache" / config.digest()
    terms = read_csv(directory / "variance.csv")
    assert terms[0] == {"lag": "0", "correlation": "0.5"}
    table = read_csv(directory / "mdp.csv")
    assert [int(row["T"]) for row in table] == [8, 16, 32]
    pressure = read_csv(directory / "pressure.csv")
    assert len(pressure) == 5
    assert float(pressure[2]["F"]) == 0.0
    assert len(read_csv(directory / "rate.csv")) == 11
    stored = RunManifest.load(directory / "manifest.json", root=tmp_path)
    assert stored.verify()
    assert stored.summary == manifest.summary


def test_cache_hit_recomputes_nothing(tmp_path, monkeypatch):
    config = small_config(tmp_path, stages=["variance", "constant", "pressure"])
    first = run_classical(config)

    def fail(*args, **kwargs):
        raise AssertionError("cached stage was recomputed")

    monkeypatch.setattr(pipelines, "exact_variance", fail)
    monkeypatch.setattr(pipelines, "pressure_curve", fail)
    second = run_classical(config)
    assert set(second.stage_status.values()) == {STATUS_CACHED}
    assert second.artifacts == first.artifacts
    assert second.summary == first.summary


def test_stage_selection_shares_the_cache(tmp_path, monkeypatch):
    first = run_classical(small_config(tmp_path, stages=["variance"]))
    assert first.stage_status == {"variance": STATUS_OK}

    def fail(*args, **kwargs):
        raise AssertionError("cached stage was recomputed")

    monkeypatch.setattr(pipelines, "exact_variance", fail)
    second = run_classical(small_config(tmp_path, stages=["variance", "constant"]))
    assert second.stage_status == {"variance": STATUS_CACHED, "constant": STATUS_OK}


def test_results_do_not_depend_on_jobs(tmp_path):
    serial = run_classical(small_config(tmp_path / "serial", jobs=1), ["variance", "mdp"])
    threaded = run_classical(small_config(tmp_path / "threaded", jobs=3), ["variance", "mdp"])
    assert serial.artifacts == threaded.artifacts


def test_constant_observable(tmp_path):
    constant = TorusObservable.constant(1.0).to_json()
    config = small_config(tmp_path, observable=constant, stages=["variance", "constant", "rate"])
    manifest = run_classical(config)
    assert manifest.summary["c_infinite"]
    assert manifest.summary["c"] is None
    rate = read_json(tmp_path / "cache" / config.digest() / "rate.json")
    assert "skipped" in rate


def test_stage_failure_is_recorded(tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        raise RuntimeError("boom")

    monkeypatch.setattr(pipelines, "exact_variance", broken)
    config = small_config(tmp_path, stages=["variance"])
    with pytest.raises(StageFailure, match="variance"):
        run_classical(config)
    manifest = read_json(tmp_path / "cache" / config.digest() / "manifest.json")
    assert manifest["stage_status"] == {"variance": STATUS_FAILED}
    assert not (tmp_path / "cache" / config.digest() / "variance.json").exists()


def test_run_quantum(tmp_path):
    config = small_config(tmp_path)
    manifest = run_quantum(config)
    for N in config.N_list:
        assert manifest.stage_status[f"spectrum_N{N}"] == STATUS_OK
        rows = read_csv(tmp_path / "cache" / config.digest() / f"spectrum_N{N}.csv")
        assert len(rows) == N
        assert list(rows[0]) == ["re", "im", "modulus", "decay_rate"]
    assert manifest.stage_status["concentration_shrinking"] == STATUS_OK
    assert manifest.stage_status["concentration_fixed"] == STATUS_OK
    assert len(manifest.summary["shrinking_fractions"]) == 3
    assert manifest.summary["c_damping"] == pytest.approx(1 / (2 * 0.962424 * 0.045), rel=1e-5)
    assert "numpy" in manifest.versions
    assert "qibo" in manifest.versions
    assert manifest.verify()


def test_undamped_quantum_run(tmp_path):
    damping = TorusObservable.constant(0.0).to_json()
    manifest = run_quantum(small_config(tmp_path, damping=damping))
    assert manifest.summary["shrinking_fractions"] == [0.0, 0.0, 0.0]
    assert manifest.summary["c_damping_infinite"]


def test_run_full_joins_constants(tmp_path):
    config = small_config(tmp_path)
    manifest = run_full(config)
    assert manifest.summary["c"] == pytest.approx(1.0390434606, abs=1e-8)
    c_damping = manifest.summary["c_damping"]
    report = read_json(tmp_path / "cache" / config.digest() / "concentration_shrinking.json")
    for row in report["rows"]:
        assert row["bound_value"] == pytest.approx(bound_value(row["width"], row["N"], c_damping))
    assert "fixed_predicted_exponent" not in manifest.summary


def test_cli_validate(tmp_path, capsys):
    path = write_config(tmp_path)
    assert main(["validate", "--config", str(path)]) == 0
    assert json.loads(capsys.readouterr().out)["valid"]


def test_cli_validation_exit_status(tmp_path):
    path = write_config(tmp_path, gamma=0.6)
    assert main(["variance", "--config", str(path), "--out", str(tmp_path / "out")]) == 2


def test_cli_variance(tmp_path, capsys):
    path = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["variance", "--config", str(path), "--out", str(out), "--seed", "4"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["sigma_sq_exact"] == pytest.approx(0.5)
    config = ExperimentConfig.from_file(path, seed=4, output_dir=str(out))
    assert (out / "cache" / config.digest() / "variance.csv").exists()


def test_cli_numerical_exit_status(tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        raise RuntimeError("boom")

    monkeypatch.setattr(pipelines, "mc_variance", broken)
    path = write_config(tmp_path)
    assert main(["variance", "--config", str(path), "--out", str(tmp_path / "out")]) == 3


def test_cli_requires_command():
    with pytest.raises(SystemExit):
        main([])


def test_spectrum_artifact_hashes(tmp_path):
    config = small_config(tmp_path, N_list=[32, 64, 128])
    manifest = run_quantum(config, ["spectrum"])
    entry = manifest.artifacts["spectrum_N32"][1]
    assert entry["sha256"] == sha256_file(tmp_path / entry["path"])
