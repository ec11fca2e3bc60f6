"""
Environment-level settings for pdnet.

Defaults come from the process environment, optionally populated from a ``.env``
file in the working directory. Explicit config values and CLI flags override them.
"""

import os
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Optional

from dotenv import load_dotenv

from .errors import ConfigError


@dataclass(frozen=True)
class Settings:
    """Resolved environment settings."""

    out_dir: str = "out"
    seed: int = 0
    trials: int = 100
    log_level: str = "WARNING"

    @classmethod
    def from_env(cls, env_file: Optional[Path] = None) -> "Settings":
        """
        Read settings from the environment.

        Args:
            env_file: Optional .env file; defaults to ``.env`` in the current directory.

        Returns:
            Settings instance
        """
        load_dotenv(env_file if env_file is not None else Path.cwd() / ".env")

        try:
            seed = int(os.getenv("PDNET_SEED", "0"))
            trials = int(os.getenv("PDNET_TRIALS", "100"))
        except ValueError as e:
            raise ConfigError(f"PDNET_SEED and PDNET_TRIALS must be integers: {e}")

        return cls(
            out_dir=os.getenv("PDNET_OUT_DIR", "out"),
            seed=seed,
            trials=trials,
            log_level=os.getenv("PDNET_LOG_LEVEL", "WARNING").upper(),
        )

    def with_overrides(self, **overrides: Any) -> "Settings":
        """Return a copy with the non-None overrides applied."""
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


# Global settings instance
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Get or lazily create the process-wide settings."""
    global _settings

    if _settings is None:
        _settings = Settings.from_env()

    return _settings


def configure_settings(settings: Optional[Settings] = None) -> Settings:
    """
    Replace the process-wide settings.

    Args:
        settings: New settings; ``None`` re-reads the environment.
    """
    global _settings
    _settings = settings if settings is not None else Settings.from_env()
    return _settings
