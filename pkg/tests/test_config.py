import pytest

from cubesheaf.core.config import ApplicationConfig, BudgetConfig, ConfigManager, WorkerConfig


def test_budget_overlay_keeps_base():
    base = BudgetConfig(enumeration=100, dense_eigen=7)
    merged = BudgetConfig.from_dict({"enumeration": "2048", "other": 1}, base)
    assert merged.enumeration == 2048
    assert merged.dense_eigen == 7
    assert base.enumeration == 100


def test_defaults_validate():
    ApplicationConfig().validate()


@pytest.mark.parametrize("config", [
    ApplicationConfig(workers=WorkerConfig(jobs=0)),
    ApplicationConfig(workers=WorkerConfig(batch_size=0)),
    ApplicationConfig(budgets=BudgetConfig(explicit_walk=0)),
])
def test_validation_errors(config):
    with pytest.raises(ValueError, match="Configuration validation failed"):
        config.validate()


def test_unknown_log_level():
    config = ApplicationConfig()
    config.logging.level = "LOUD"
    with pytest.raises(ValueError, match="Unknown log level"):
        config.validate()


def test_environment_overrides(monkeypatch, tmp_path):
    monkeypatch.setenv("HDX_JOBS", "4")
    monkeypatch.setenv("HDX_ENUM_BUDGET", "1024")
    config = ConfigManager(str(tmp_path / "missing.env")).reload_config()
    assert config.workers.jobs == 4
    assert config.budgets.enumeration == 1024


def test_environment_validation(monkeypatch):
    monkeypatch.setenv("HDX_CHUNK_SIZE", "0")
    with pytest.raises(ValueError):
        ConfigManager().get_config()
