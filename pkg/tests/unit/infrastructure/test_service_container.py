from __future__ import annotations

from pathlib import Path

from config.settings import Settings
from infrastructure.container import service_container
from infrastructure.container.service_container import ServiceContainer


def _settings(tmp_path: Path) -> Settings:
    return Settings(
        GROD_OUTPUT_DIR=tmp_path / "output",
        GROD_DATA_DIR=tmp_path / "data",
        GROD_LOGS_DIR=tmp_path / "logs",
    )


def test_container_wires_shared_use_cases(tmp_path: Path):
    container = ServiceContainer(settings=_settings(tmp_path))
    assert (tmp_path / "logs").is_dir()
    assert container.sweep_use_case.trainer is container.train_use_case
    assert container.ingest_use_case.evaluator is container.evaluate_use_case
    assert container.train_use_case.telemetry is container.telemetry
    assert container.telemetry.logs_dir == tmp_path / "logs"
    controller = container.experiment_controller
    assert controller.feature_store is container.feature_store


def test_get_container_is_a_singleton(tmp_path: Path, monkeypatch):
    monkeypatch.setattr(service_container, "ServiceContainer", lambda: ServiceContainer(settings=_settings(tmp_path)))
    monkeypatch.setattr(service_container.get_container, "_instance", None, raising=False)
    first = service_container.get_container()
    assert service_container.get_container() is first
