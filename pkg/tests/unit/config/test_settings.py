from __future__ import annotations

from pathlib import Path

from config import get_settings, reload_settings
from config.settings import Settings


def test_settings_read_prefixed_environment(monkeypatch, tmp_path: Path):
    monkeypatch.setenv("GROD_LOG_LEVEL", "DEBUG")
    monkeypatch.setenv("GROD_LOGS_DIR", str(tmp_path / "logs"))
    settings = Settings()
    assert settings.log_level == "DEBUG"
    assert settings.metrics_log_path == tmp_path / "logs" / "metrics.log"
    assert settings.histogram_path.name == "metrics_histograms.json"


def test_ensure_runtime_directories_is_idempotent(tmp_path: Path):
    settings = Settings(
        GROD_OUTPUT_DIR=tmp_path / "out",
        GROD_DATA_DIR=tmp_path / "data",
        GROD_LOGS_DIR=tmp_path / "logs",
    )
    settings.ensure_runtime_directories()
    settings.ensure_runtime_directories()
    assert all((tmp_path / name).is_dir() for name in ("out", "data", "logs"))


def test_split_urls_drops_blanks():
    assert Settings.split_urls(" http://a , ,http://b") == ["http://a", "http://b"]


def test_get_settings_is_cached_until_reloaded(monkeypatch):
    reload_settings()
    first = get_settings()
    assert get_settings() is first
    monkeypatch.setenv("GROD_LOG_LEVEL", "WARNING")
    reload_settings()
    assert get_settings().log_level == "WARNING"
    reload_settings()
