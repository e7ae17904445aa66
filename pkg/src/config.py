"""
Configuration management for sk-descent.
Loads environment variables and provides app-wide settings.

Only the output directory and the worker count can be overridden from the
environment; everything that affects numerical results lives in the
campaign configuration.
"""

import os
from pathlib import Path
from dotenv import load_dotenv

from . import __version__
from .sk_model import GENERATOR_VERSION

# Load .env file from project root (for local development)
env_path = Path(__file__).parent.parent / ".env"
load_dotenv(dotenv_path=env_path)


def get_setting(key: str, default: str = "") -> str:
    """Get a setting from the environment, falling back to a default."""
    return os.getenv(key, default)


class Config:
    """Application configuration loaded from environment variables."""

    # Output
    OUTPUT_DIR: str = get_setting("SKDESCENT_OUTPUT_DIR", "results")

    # Parallelism
    WORKERS_RAW: str = get_setting("SKDESCENT_WORKERS", "1")

    # Versions recorded in every manifest
    BUILD_VERSION: str = __version__
    GENERATOR_VERSION: str = GENERATOR_VERSION

    @classmethod
    def workers(cls) -> int:
        """Worker count from SKDESCENT_WORKERS."""
        cls.validate()
        return int(cls.WORKERS_RAW)

    @classmethod
    def database_path(cls) -> Path:
        """Location of the campaign database inside the output directory."""
        return Path(cls.OUTPUT_DIR) / "campaigns.db"

    @classmethod
    def validate(cls) -> bool:
        """Check that environment overrides are usable."""
        try:
            workers = int(cls.WORKERS_RAW)
        except ValueError:
            workers = 0
        if workers < 1:
            raise ValueError(
                f"SKDESCENT_WORKERS must be a positive integer, got {cls.WORKERS_RAW!r}"
            )
        return True
