from __future__ import annotations

from dataclasses import dataclass, field

from application.controllers.experiment_controller import ExperimentController
from application.logging_config import configure_logging
from config import Settings, get_settings
from domain.usecases.ablate_hyperparameters import AblateHyperparameters
from domain.usecases.evaluate_detector import EvaluateDetector
from domain.usecases.generate_data import GenerateData
from domain.usecases.ingest_features import IngestFeatures
from domain.usecases.sweep_capacity import SweepCapacity
from domain.usecases.train_detector import TrainDetector
from infrastructure.persistence.checkpoint_store import NpzCheckpointStore, NpzGrodStateStore
from infrastructure.persistence.feature_files import CsvFeatureStore
from infrastructure.persistence.report_writer import JsonReportStore, PandasTableStore
from infrastructure.telemetry.metrics_logger import MetricsLogger


@dataclass
class ServiceContainer:
    """Centralized dependency container for the CLI."""

    settings: Settings = field(default_factory=get_settings)

    def __post_init__(self) -> None:
        self.settings.ensure_runtime_directories()
        configure_logging(self.settings.log_level)

        self.telemetry = MetricsLogger.from_settings(self.settings)
        self.feature_store = CsvFeatureStore()
        self.checkpoint_store = NpzCheckpointStore()
        self.state_store = NpzGrodStateStore()
        self.report_store = JsonReportStore()
        self.table_store = PandasTableStore()

        self.train_use_case = TrainDetector(telemetry=self.telemetry)
        self.evaluate_use_case = EvaluateDetector()
        self.generate_data_use_case = GenerateData(self.feature_store)
        self.sweep_use_case = SweepCapacity(trainer=self.train_use_case, telemetry=self.telemetry)
        self.ingest_use_case = IngestFeatures(trainer=self.train_use_case, evaluator=self.evaluate_use_case)
        self.ablate_use_case = AblateHyperparameters(
            trainer=self.train_use_case,
            evaluator=self.evaluate_use_case,
            telemetry=self.telemetry,
        )

        self.experiment_controller = ExperimentController(
            feature_store=self.feature_store,
            checkpoint_store=self.checkpoint_store,
            state_store=self.state_store,
            report_store=self.report_store,
            table_store=self.table_store,
            generate_data=self.generate_data_use_case,
            train_detector=self.train_use_case,
            evaluate_detector=self.evaluate_use_case,
            sweep_capacity=self.sweep_use_case,
            ingest_features=self.ingest_use_case,
            ablate_hyperparameters=self.ablate_use_case,
        )


def get_container() -> ServiceContainer:
    if getattr(get_container, "_instance", None) is None:
        get_container._instance = ServiceContainer()  # type: ignore[attr-defined]
    return get_container._instance  # type: ignore[attr-defined]
