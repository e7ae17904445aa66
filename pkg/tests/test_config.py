from pathlib import Path

import pytest

from src import __version__
from src.config import Config


def test_workers_from_environment(monkeypatch):
    monkeypatch.setattr(Config, "WORKERS_RAW", "4")
    assert Config.workers() == 4


@pytest.mark.parametrize("raw", ["0", "-2", "many", ""])
def test_invalid_worker_setting(monkeypatch, raw):
    monkeypatch.setattr(Config, "WORKERS_RAW", raw)
    with pytest.raises(ValueError, match="SKDESCENT_WORKERS"):
        Config.validate()


def test_database_lives_in_output_dir(monkeypatch):
    monkeypatch.setattr(Config, "OUTPUT_DIR", "somewhere")
    assert Config.database_path() == Path("somewhere") / "campaigns.db"


def test_versions_are_recorded():
    assert Config.BUILD_VERSION == __version__
    assert Config.GENERATOR_VERSION
