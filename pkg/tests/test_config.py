import json
from pathlib import Path

import pytest

from renewal_ld.config import Settings, load_experiment_config, resolve_config
from renewal_ld.errors import ConfigError
from renewal_ld.models import ExperimentConfig, ParetoSpec


@pytest.fixture
def settings(monkeypatch):
    for key in ("OUTPUT_DIR", "THREADS", "SEED", "BATCH_SIZE", "QUAD_TOL", "LOG_LEVEL"):
        monkeypatch.delenv(f"RENEWAL_LD_{key}", raising=False)
    return Settings.from_env()


def write(tmp_path, doc):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return path


def test_settings_defaults(settings):
    assert settings.output_dir == "results"
    assert settings.threads == 1
    assert settings.seed == 20240101
    assert settings.batch_size == 65536
    assert settings.quad_tol == 1e-10
    assert settings.log_level == "INFO"


def test_settings_read_environment(monkeypatch):
    monkeypatch.setenv("RENEWAL_LD_THREADS", "4")
    monkeypatch.setenv("RENEWAL_LD_LOG_LEVEL", "debug")
    monkeypatch.setenv("RENEWAL_LD_LOG_TIMESTAMPS", "no")
    settings = Settings.from_env()
    assert settings.threads == 4
    assert settings.log_level == "DEBUG"
    assert settings.log_timestamps is False


def test_settings_reject_bad_numbers(monkeypatch):
    monkeypatch.setenv("RENEWAL_LD_SEED", "abc")
    with pytest.raises(ConfigError, match="RENEWAL_LD_"):
        Settings.from_env()


@pytest.mark.parametrize(("value", "expected"), [("1", True), ("Yes", True), ("off", False), (None, True)])
def test_get_bool(value, expected):
    assert Settings._get_bool(value, True) is expected


def test_load_valid_config(tmp_path):
    path = write(tmp_path, {"name": "fig1", "distribution": {"family": "pareto", "m": 3}, "h": [-1]})
    config = load_experiment_config(path)
    assert config.distribution == ParetoSpec(m=3.0)
    assert config.h == (-1.0,)


@pytest.mark.parametrize(
    "doc",
    [
        "{not json",
        {"distribution": {"family": "pareto", "m": 2}},
        {"distribution": {"family": "weibull", "k": 1}},
        {"distribution": {"family": "pareto", "m": 3}, "unknown": 1},
        {"distribution": {"family": "pareto", "m": 3}, "x": [-0.5]},
        {"distribution": {"family": "pareto", "m": 3}, "n_traj": 0},
    ],
)
def test_invalid_configs_raise_config_error(tmp_path, doc):
    with pytest.raises(ConfigError):
        load_experiment_config(write(tmp_path, doc))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_experiment_config(tmp_path / "nope.json")


def test_resolution_precedence(settings):
    config = ExperimentConfig(distribution=ParetoSpec(m=3.0), seed=5)
    resolved = resolve_config(config, settings)
    assert resolved.seed == 5
    assert resolved.output_dir == "results"
    assert resolved.batch_size == 65536
    overridden = resolve_config(config, settings, output_dir="out", seed=9)
    assert overridden.seed == 9
    assert overridden.output_dir == "out"
    assert resolve_config(ExperimentConfig(distribution=ParetoSpec(m=3.0)), settings).seed == 20240101


def test_shipped_configs_parse():
    configs = sorted(Path(__file__).resolve().parents[1].joinpath("configs").glob("*.json"))
    assert len(configs) >= 15
    for path in configs:
        load_experiment_config(path)
