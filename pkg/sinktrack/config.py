import logging
import os
from typing import Optional

from dotenv import find_dotenv, load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

from .errors import ConfigurationError

# logging.getLevelNamesMapping is 3.11+; same result as its stdlib implementation
_level_names_mapping = getattr(logging, "getLevelNamesMapping", lambda: dict(logging._nameToLevel))

THREADS_ENV_VAR = "SINKTRACK_THREADS"
LOG_LEVEL_ENV_VAR = "SINKTRACK_LOG_LEVEL"

_LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s:%(lineno)d: %(message)s"
_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


class Settings(BaseModel):
    """Runtime settings read from the environment."""

    threads: int = Field(0, ge=0)
    log_level: str = "INFO"

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        value = value.upper()
        if value not in _level_names_mapping():
            raise ValueError(f"unknown log level {value!r}")
        return value

    @property
    def worker_count(self) -> int:
        """Number of worker threads to use; 0 means one per CPU."""
        return self.threads or (os.cpu_count() or 1)


def load_settings() -> Settings:
    """
    Build the settings from the process environment (and a `.env` file, if present).

    Raises:
        ConfigurationError: If an environment variable holds an invalid value.
    """
    load_dotenv(find_dotenv(usecwd=True))
    raw = {}
    if os.getenv(THREADS_ENV_VAR, "").strip():
        raw["threads"] = os.environ[THREADS_ENV_VAR].strip()
    if os.getenv(LOG_LEVEL_ENV_VAR, "").strip():
        raw["log_level"] = os.environ[LOG_LEVEL_ENV_VAR].strip()
    try:
        return Settings(**raw)
    except ValidationError as exc:
        raise ConfigurationError(f"Invalid sinktrack environment configuration: {exc}") from exc


def setup_logging(level: str = "INFO", log_file: Optional[str] = None):
    """Set up logging to console and, optionally, a file with line numbers."""
    formatter = logging.Formatter(_LOG_FORMAT, datefmt=_DATE_FORMAT)

    handlers: list[logging.Handler] = [logging.StreamHandler()]
    if log_file:
        handlers.append(logging.FileHandler(log_file))

    # Get root logger, drop handlers from an earlier call and attach the new ones
    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    for handler in [h for h in root_logger.handlers if getattr(h, "_sinktrack", False)]:
        root_logger.removeHandler(handler)
        handler.close()
    for handler in handlers:
        handler._sinktrack = True
        handler.setLevel(level)
        handler.setFormatter(formatter)
        root_logger.addHandler(handler)

    # Reduce verbosity from plotting libraries
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("PIL").setLevel(logging.WARNING)
