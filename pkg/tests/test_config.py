import pytest
import yaml

from chunglu_cutoff.data.models import ExperimentConfig, ExperimentKind
from chunglu_cutoff.utils.config import ENV_LOG_LEVEL, ENV_WORKERS, ConfigManager
from chunglu_cutoff.utils.errors import ConfigError


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    monkeypatch.delenv(ENV_LOG_LEVEL, raising=False)
    monkeypatch.delenv(ENV_WORKERS, raising=False)


@pytest.fixture
def manager(tmp_path):
    return ConfigManager(tmp_path / "experiment.yaml")


def test_missing_file_gives_defaults(manager):
    raw = manager.load_config()
    assert raw["version"] == 1
    assert raw["logging"]["level"] == "INFO"
    assert manager.experiment_config(raw) == ExperimentConfig()


def test_create_default_configs_once(manager):
    assert manager.create_default_configs()
    assert manager.config_path.exists()
    assert not manager.create_default_configs()


def test_round_trip(manager):
    config = ExperimentConfig(weights="two-class:3,1.5,0.3", n_list=[200, 400], replicas=2, h_eps=2)
    manager.save_config(ConfigManager.to_dict(config, {"level": "DEBUG"}))
    raw = manager.load_config()
    assert manager.experiment_config(raw) == config
    assert manager.logging_config(raw) == {"level": "DEBUG"}


def test_empty_file_gives_defaults(manager):
    manager.config_path.write_text("", encoding="utf-8")
    assert manager.load_config()["version"] == 1


def test_cli_overrides_win(manager):
    raw = {"version": 1, "seed": 5, "replicas": 3}
    config = manager.experiment_config(raw, {"seed": 9, "replicas": None, "experiment": ExperimentKind.MIX})
    assert config.seed == 9
    assert config.replicas == 3
    assert config.experiment == ExperimentKind.MIX


def test_environment_overrides(manager, monkeypatch):
    monkeypatch.setenv(ENV_WORKERS, "3")
    monkeypatch.setenv(ENV_LOG_LEVEL, "warning")
    raw = {"version": 1, "workers": 1, "logging": {"level": "INFO"}}
    assert manager.experiment_config(raw).workers == 3
    assert manager.logging_config(raw)["level"] == "WARNING"


def test_workers_do_not_change_digest():
    assert ExperimentConfig(workers=1).digest() == ExperimentConfig(workers=8).digest()
    assert ExperimentConfig(seed=1).digest() != ExperimentConfig(seed=2).digest()


@pytest.mark.parametrize(
    "text",
    [
        "version: [unclosed",
        "- just\n- a list\n",
    ],
)
def test_malformed_files(manager, text):
    manager.config_path.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigError):
        manager.load_config()


@pytest.mark.parametrize(
    "raw",
    [
        {"version": 1, "replicaz": 3},
        {"version": 2},
        {"version": 1, "n_list": [1]},
        {"version": 1, "eps": 1.5},
    ],
)
def test_invalid_values(manager, raw):
    with pytest.raises(ConfigError) as info:
        manager.experiment_config(raw)
    assert "invalid configuration" in str(info.value)


def test_saved_file_is_plain_yaml(manager):
    manager.create_default_configs()
    data = yaml.safe_load(manager.config_path.read_text(encoding="utf-8"))
    assert data["experiment"] == "cutoff"
    assert data["n_list"] == [1000]
