"""Configuration management for sinkless-lb."""

import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from .error_handler import ConfigError, ParseError, TimeBudgetExceeded

ENV_PREFIX = "SINKLESS_LB"

DEFAULTS: Dict[str, Any] = {
    "node_budget": 2 ** 27,
    "time_budget": None,
    "seed": 0,
    "delta": 3,
    "samples": 2000,
    "slack": 0.02,
    "max_branches": 4096,
    "log_level": "WARNING",
}


class ConfigManager:
    """
    Manage configuration with priority:
    1. Environment variables
    2. Profile-specific config file
    3. Default profile
    4. Built-in defaults
    """

    def __init__(self, config_dir: Optional[Path] = None):
        """
        Initialize config manager.

        Args:
            config_dir: Custom config directory (default: $SINKLESS_LB_CONFIG_DIR,
                then ~/.sinkless-lb)
        """
        env_dir = os.environ.get(f"{ENV_PREFIX}_CONFIG_DIR")
        self.config_dir = config_dir or (Path(env_dir) if env_dir else Path.home() / ".sinkless-lb")
        self.config_file = self.config_dir / "config.yaml"
        self._config: Dict[str, Dict[str, Any]] = {}

        self._load_config()

    def _load_config(self):
        """Load configuration from file."""
        if not self.config_file.exists():
            return
        try:
            loaded = yaml.safe_load(self.config_file.read_text()) or {}
        except yaml.YAMLError as e:
            raise ParseError(f"{self.config_file}: {e}") from e
        if not isinstance(loaded, dict):
            raise ParseError(f"{self.config_file}: expected a mapping of profiles")
        self._config = loaded

    def _save_config(self):
        """Save configuration to file."""
        self.config_dir.mkdir(parents=True, exist_ok=True)
        self.config_file.write_text(yaml.safe_dump(self._config, sort_keys=True))

    def get(self, key: str, profile: str = "default", default: Any = None) -> Any:
        """
        Get configuration value.

        Priority:
        1. Environment variable (SINKLESS_LB_{KEY})
        2. Profile-specific value
        3. Default profile value
        4. Built-in default, then the default argument

        Args:
            key: Configuration key
            profile: Profile name
            default: Fallback when the key has no built-in default

        Returns:
            Configuration value
        """
        env_value = os.environ.get(f"{ENV_PREFIX}_{key.upper()}")
        if env_value is not None:
            return env_value

        profile_config = self._config.get(profile, {})
        if key in profile_config:
            return profile_config[key]

        if profile != "default":
            default_config = self._config.get("default", {})
            if key in default_config:
                return default_config[key]

        return DEFAULTS.get(key, default)

    def get_int(self, key: str, profile: str = "default") -> Optional[int]:
        """Get a value coerced to int (None stays None)."""
        value = self.get(key, profile=profile)
        if value is None or value == "":
            return None
        try:
            if isinstance(value, str) and any(c in value for c in ".eE"):
                return int(float(value))
            return int(value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{key} must be an integer, got {value!r}") from e

    def get_float(self, key: str, profile: str = "default") -> Optional[float]:
        """Get a value coerced to float (None stays None)."""
        value = self.get(key, profile=profile)
        if value is None or value == "":
            return None
        try:
            return float(value)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{key} must be a number, got {value!r}") from e

    def set(self, key: str, value: Any, profile: str = "default"):
        """
        Set configuration value.

        Args:
            key: Configuration key
            value: Configuration value
            profile: Profile name
        """
        if key not in DEFAULTS:
            raise ConfigError(f"unknown key '{key}' (known: {', '.join(sorted(DEFAULTS))})")
        self._config.setdefault(profile, {})[key] = value
        self._save_config()

    def delete(self, key: str, profile: str = "default") -> bool:
        """
        Delete configuration value.

        Returns:
            True if deleted, False if not found
        """
        if profile in self._config and key in self._config[profile]:
            del self._config[profile][key]
            self._save_config()
            return True
        return False

    def list_profiles(self) -> list:
        """List all profiles."""
        return list(self._config.keys())

    def get_profile(self, profile: str = "default") -> Dict[str, Any]:
        """Get all values for a profile."""
        return dict(self._config.get(profile, {}))


class Deadline:
    """Wall-clock budget checked from long-running loops."""

    def __init__(self, seconds: Optional[float]):
        self.seconds = seconds
        self.started = time.monotonic()

    def check(self) -> None:
        if self.seconds is None:
            return
        elapsed = time.monotonic() - self.started
        if elapsed > self.seconds:
            raise TimeBudgetExceeded(elapsed, self.seconds)


@dataclass
class RunSettings:
    """Resolved settings handed from the CLI to the domain layer."""

    node_budget: Optional[int] = DEFAULTS["node_budget"]
    time_budget: Optional[float] = None
    seed: int = 0
    samples: int = DEFAULTS["samples"]
    slack: float = DEFAULTS["slack"]
    max_branches: int = DEFAULTS["max_branches"]
    deadline: Deadline = field(default_factory=lambda: Deadline(None))

    @classmethod
    def resolve(
        cls,
        config: ConfigManager,
        profile: str = "default",
        **overrides: Any,
    ) -> "RunSettings":
        """Build settings from the config layers, letting non-None overrides win."""
        values = {
            "node_budget": config.get_int("node_budget", profile),
            "time_budget": config.get_float("time_budget", profile),
            "seed": config.get_int("seed", profile) or 0,
            "samples": config.get_int("samples", profile),
            "slack": config.get_float("slack", profile),
            "max_branches": config.get_int("max_branches", profile),
        }
        for key, value in overrides.items():
            if value is not None:
                values[key] = value
        return cls(deadline=Deadline(values["time_budget"]), **values)
