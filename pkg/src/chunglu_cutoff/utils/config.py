"""
Configuration management utilities.

An experiment file is YAML: ``version: 1``, an optional ``logging`` section
and flat experiment keys that validate into :class:`ExperimentConfig`.
"""

import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv
from loguru import logger
from pydantic import ValidationError

from ..data.models import ExperimentConfig
from .errors import ConfigError
from .logger import DEFAULT_FORMAT

LOGGING_KEY = "logging"
ENV_LOG_LEVEL = "CHUNGLU_LOG_LEVEL"
ENV_WORKERS = "CHUNGLU_WORKERS"


class ConfigManager:
    """Loads, saves and validates experiment configuration files."""

    def __init__(self, config_path: Optional[Path] = None):
        """Initialize configuration manager.

        Args:
            config_path: Optional path to the experiment file
        """
        self.config_dir = Path("config")
        self.config_path = Path(config_path) if config_path else self.config_dir / "experiment.yaml"
        load_dotenv()

    def load_config(self) -> Dict[str, Any]:
        """Load the raw configuration, falling back to defaults if absent.

        Returns:
            Configuration dictionary

        Raises:
            ConfigError: If the file exists but is not a YAML mapping
        """
        if not self.config_path.exists():
            logger.warning(f"Config file not found: {self.config_path}, using defaults")
            return self._get_default_config()

        try:
            with open(self.config_path, "r", encoding="utf-8") as f:
                config = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"cannot parse {self.config_path}: {e}") from e

        if config is None:
            return self._get_default_config()
        if not isinstance(config, dict):
            raise ConfigError(f"{self.config_path} must hold a mapping, got {type(config).__name__}")
        logger.info(f"Configuration loaded from {self.config_path}")
        return config

    def save_config(self, config: Dict[str, Any]) -> None:
        """Save configuration to file.

        Args:
            config: Configuration dictionary to save
        """
        self.config_path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.config_path, "w", encoding="utf-8") as f:
            yaml.safe_dump(config, f, default_flow_style=False, indent=2, sort_keys=False)
        logger.info(f"Configuration saved to {self.config_path}")

    def create_default_configs(self) -> bool:
        """Create the default experiment file if it doesn't exist.

        Returns:
            True if a file was written
        """
        if self.config_path.exists():
            return False
        self.save_config(self._get_default_config())
        logger.info(f"Created default config: {self.config_path}")
        return True

    def logging_config(self, config: Dict[str, Any]) -> Dict[str, Any]:
        """The logging section with environment overrides applied."""
        section = dict(config.get(LOGGING_KEY) or {})
        if os.getenv(ENV_LOG_LEVEL):
            section["level"] = os.environ[ENV_LOG_LEVEL].upper()
        return section

    def experiment_config(
        self, config: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None
    ) -> ExperimentConfig:
        """Validate the experiment keys, applying environment and CLI overrides.

        Args:
            config: Raw configuration dictionary
            overrides: Values from the command line; None entries are ignored

        Returns:
            Validated ExperimentConfig

        Raises:
            ConfigError: On unknown keys or out-of-range values
        """
        values = {k: v for k, v in config.items() if k != LOGGING_KEY}
        if os.getenv(ENV_WORKERS):
            values["workers"] = os.environ[ENV_WORKERS]
        for key, value in (overrides or {}).items():
            if value is not None:
                values[key] = value
        try:
            return ExperimentConfig.model_validate(values)
        except ValidationError as e:
            problems = "; ".join(
                f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
            )
            raise ConfigError(f"invalid configuration: {problems}") from e

    @staticmethod
    def to_dict(experiment: ExperimentConfig, logging: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """File form of a config; ``experiment_config`` reads it back unchanged."""
        data: Dict[str, Any] = experiment.model_dump(mode="json")
        if logging:
            data[LOGGING_KEY] = logging
        return data

    def _get_default_config(self) -> Dict[str, Any]:
        """Get default configuration."""
        return self.to_dict(
            ExperimentConfig(),
            {
                "level": "INFO",
                "format": DEFAULT_FORMAT,
                "file": None,
                "rotation": "10 MB",
                "retention": "30 days",
                "json": False,
            },
        )
