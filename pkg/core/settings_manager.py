import json
import os
import shutil
from typing import Optional

from .configuration import ExperimentConfig
from .errors import ConfigError
from .logging_config import get_logger

logger = get_logger(__name__)


class SettingsManager:
    """Loads, migrates and saves the JSON experiment configuration.

    Without a path the manager holds the built-in defaults.
    """

    def __init__(self, filename: Optional[str] = None) -> None:
        self.filename = filename
        self.config = ExperimentConfig()
        if filename is not None:
            self.load()

    def load(self) -> None:
        """Loads configuration from file with schema validation and migration.

        Raises:
            ConfigError: If the file is missing, is not valid JSON, or a field is invalid.
        """
        if not os.path.exists(self.filename):
            raise ConfigError("--config", f"config file {self.filename} does not exist")
        try:
            with open(self.filename, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"line {e.lineno}", f"invalid JSON in {self.filename}: {e.msg}") from e
        except OSError as e:
            raise ConfigError("--config", f"failed to read {self.filename}: {e}") from e

        self.config = self.parse(data)
        logger.debug(f"Configuration loaded from {self.filename}")

    @classmethod
    def parse(cls, data: object) -> ExperimentConfig:
        """Schema check, migration and validation of an in-memory config mapping."""
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be a JSON object")
        config_version = data.get("config_version", 0)
        if isinstance(config_version, bool) or not isinstance(config_version, int):
            raise ConfigError("config_version", f"expected an integer, got {config_version!r}")
        if config_version > ExperimentConfig.CONFIG_VERSION:
            raise ConfigError(
                "config_version",
                f"file version {config_version} is newer than supported version {ExperimentConfig.CONFIG_VERSION}",
            )
        if config_version < ExperimentConfig.CONFIG_VERSION:
            data = ExperimentConfig.migrate_config(data, config_version)
        if not cls._validate_schema(data):
            logger.warning("Config has no state section, using the default Gaussian state")

        config = ExperimentConfig.from_dict(data)
        config.validate()
        return config

    @staticmethod
    def _validate_schema(data: dict) -> bool:
        """Report unknown top-level sections; returns False if recommended sections are missing.

        Raises:
            ConfigError: For an unknown section.
        """
        for key in data:
            if key not in ExperimentConfig.SECTIONS:
                raise ConfigError(key, "unknown section")
        return "state" in data

    def dumps(self) -> str:
        return json.dumps(self.config.to_dict(), indent=2) + "\n"

    def save(self, filename: Optional[str] = None) -> None:
        """Persist to file with atomic write for safety.

        Uses a temporary file and atomic rename to prevent corruption.
        If write fails, the original config file remains intact.

        Raises:
            OSError: If the file cannot be written.
        """
        target = filename or self.filename
        if target is None:
            raise ConfigError("--config", "no file to save the configuration to")
        temp_filename = f"{target}.tmp"
        try:
            with open(temp_filename, "w", encoding="utf-8") as f:
                f.write(self.dumps())
            if os.path.exists(target):
                shutil.copy2(target, f"{target}.bak")
            os.replace(temp_filename, target)
            if os.path.exists(f"{target}.bak"):
                os.remove(f"{target}.bak")
            logger.debug(f"Configuration saved to {target}")
        except OSError as e:
            if os.path.exists(temp_filename):
                try:
                    os.remove(temp_filename)
                except OSError:
                    pass
            logger.error(f"Failed to save configuration to {target}: {e}")
            raise
