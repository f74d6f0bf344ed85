import logging
import os

import pytest

from sinktrack.config import LOG_LEVEL_ENV_VAR, THREADS_ENV_VAR, Settings, load_settings, setup_logging
from sinktrack.errors import ConfigurationError


@pytest.fixture(autouse=True)
def _isolated_environment(monkeypatch, tmp_path):
    monkeypatch.delenv(THREADS_ENV_VAR, raising=False)
    monkeypatch.delenv(LOG_LEVEL_ENV_VAR, raising=False)
    monkeypatch.chdir(tmp_path)


def test_defaults():
    settings = load_settings()

    assert settings.threads == 0
    assert settings.log_level == "INFO"
    assert settings.worker_count == (os.cpu_count() or 1)


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv(THREADS_ENV_VAR, "3")
    monkeypatch.setenv(LOG_LEVEL_ENV_VAR, "debug")
    settings = load_settings()

    assert settings.worker_count == 3
    assert settings.log_level == "DEBUG"


def test_dotenv_file_is_read(tmp_path):
    (tmp_path / ".env").write_text(f"{THREADS_ENV_VAR}=2\n")
    try:
        assert load_settings().threads == 2
    finally:
        os.environ.pop(THREADS_ENV_VAR, None)


@pytest.mark.parametrize(
    "name, value",
    [
        (THREADS_ENV_VAR, "-1"),
        (THREADS_ENV_VAR, "many"),
        (LOG_LEVEL_ENV_VAR, "chatty"),
    ],
)
def test_invalid_values_raise_configuration_error(monkeypatch, name, value):
    monkeypatch.setenv(name, value)
    with pytest.raises(ConfigurationError):
        load_settings()


def test_settings_validate_directly():
    assert Settings(threads=5).worker_count == 5


def test_setup_logging_replaces_its_own_handlers(tmp_path):
    log_file = tmp_path / "run.log"
    setup_logging("DEBUG", str(log_file))
    setup_logging("WARNING")

    root = logging.getLogger()
    ours = [h for h in root.handlers if getattr(h, "_sinktrack", False)]
    assert len(ours) == 1
    assert root.level == logging.WARNING
    assert logging.getLogger("matplotlib").level == logging.WARNING


def test_log_file_receives_records(tmp_path):
    log_file = tmp_path / "run.log"
    setup_logging("INFO", str(log_file))
    logging.getLogger("sinktrack.test").info("hello from the tracker")
    for handler in logging.getLogger().handlers:
        handler.flush()

    assert "[INFO] sinktrack.test" in log_file.read_text()
    assert "hello from the tracker" in log_file.read_text()
