from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional

from config.experiment import ExperimentConfig
from domain.entities.features import FeatureBatch
from domain.entities.scores import MetricSummary
from domain.entities.value_objects import TaskType
from domain.ports.repositories import CheckpointStore, FeatureStore, GrodStateStore, ReportStore, TableStore
from domain.usecases.ablate_hyperparameters import AblateHyperparameters
from domain.usecases.evaluate_detector import EvaluateDetector
from domain.usecases.generate_data import TRAIN_FILE, GenerateData, GeneratedData
from domain.usecases.ingest_features import IngestFeatures
from domain.usecases.sweep_capacity import SweepCapacity
from domain.usecases.train_detector import TrainDetector

logger = logging.getLogger("grodlab.controller")

CHECKPOINT_FILE = "checkpoint.npz"
STATE_FILE = "grod_state.npz"
REPORT_FILE = "report.json"
INGEST_REPORT_FILE = "ingest_report.json"


@dataclass
class RunPaths:
    data_dir: Path
    out_dir: Path

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> "RunPaths":
        return cls(Path(config.data_dir), Path(config.out_dir))

    @property
    def checkpoint(self) -> Path:
        return self.out_dir / CHECKPOINT_FILE

    @property
    def state(self) -> Path:
        return self.out_dir / STATE_FILE

    @property
    def report(self) -> Path:
        return self.out_dir / REPORT_FILE


class ExperimentController:
    """Maps each CLI subcommand onto its use case plus the file layout under ``data_dir``/``out_dir``."""

    def __init__(
        self,
        feature_store: FeatureStore,
        checkpoint_store: CheckpointStore,
        state_store: GrodStateStore,
        report_store: ReportStore,
        table_store: TableStore,
        generate_data: GenerateData,
        train_detector: TrainDetector,
        evaluate_detector: EvaluateDetector,
        sweep_capacity: SweepCapacity,
        ingest_features: IngestFeatures,
        ablate_hyperparameters: AblateHyperparameters,
    ) -> None:
        self.feature_store = feature_store
        self.checkpoint_store = checkpoint_store
        self.state_store = state_store
        self.report_store = report_store
        self.table_store = table_store
        self.generate_data_use_case = generate_data
        self.train_use_case = train_detector
        self.evaluate_use_case = evaluate_detector
        self.sweep_use_case = sweep_capacity
        self.ingest_use_case = ingest_features
        self.ablate_use_case = ablate_hyperparameters

    def gen_data(self, config: ExperimentConfig) -> GeneratedData:
        return self.generate_data_use_case.execute(config, config.seed, RunPaths.from_config(config).data_dir)

    def train(self, config: ExperimentConfig) -> Path:
        paths = RunPaths.from_config(config)
        result = self.train_use_case.execute(
            self._load_train(paths), config, config.seed, head_only=config.task is TaskType.INGEST
        )
        self.checkpoint_store.save(paths.checkpoint, result.model)
        self.state_store.save(paths.state, result.state)
        result.summary.checkpoint_path = str(paths.checkpoint)
        self.table_store.write(paths.out_dir / "train_log", result.summary.epochs)
        if result.fake_ood_rows:
            self.table_store.write(paths.out_dir / "fake_ood", result.fake_ood_rows)
        logger.info(
            "Checkpoint saved",
            extra={
                "checkpoint": str(paths.checkpoint),
                "best_epoch": result.summary.best_epoch,
                "best_validation_auroc": result.summary.best_validation_auroc,
            },
        )
        return paths.checkpoint

    def eval(self, config: ExperimentConfig, checkpoint: Optional[Path] = None) -> MetricSummary:
        paths = RunPaths.from_config(config)
        model = self.checkpoint_store.load(Path(checkpoint) if checkpoint else paths.checkpoint)
        result = self.evaluate_use_case.execute(
            model, self._load_train(paths), self._load_eval_sets(config, paths), config, config.seed
        )
        self.report_store.write(paths.report, result.report)
        for name in result.score_reports:
            self.table_store.write(paths.out_dir / f"scores_{Path(name).stem}", result.score_rows(name))
        return result.report.metrics

    def sweep_capacity(self, config: ExperimentConfig) -> List[Dict[str, Any]]:
        paths = RunPaths.from_config(config)
        test = self._load_eval_sets(config, paths)
        result = self.sweep_use_case.execute(self._load_train(paths), FeatureBatch.concat(list(test.values())), config)
        self.table_store.write(paths.out_dir / "capacity_sweep", result.rows)
        self.table_store.write(paths.out_dir / "capacity_histograms", result.histogram_rows)
        return result.rows

    def ingest(self, config: ExperimentConfig) -> MetricSummary:
        paths = RunPaths.from_config(config)
        result = self.ingest_use_case.execute(
            self._load_train(paths), self._load_eval_sets(config, paths), config, config.seed
        )
        self.checkpoint_store.save(paths.checkpoint, result.training.model)
        self.state_store.save(paths.state, result.training.state)
        self.report_store.write(paths.out_dir / INGEST_REPORT_FILE, result.report)
        return result.report.metrics

    def ablate(self, config: ExperimentConfig) -> List[Dict[str, Any]]:
        paths = RunPaths.from_config(config)
        rows = self.ablate_use_case.execute(
            self._load_train(paths),
            self._load_eval_sets(config, paths),
            config,
            head_only=config.task is TaskType.INGEST,
        )
        self.table_store.write(paths.out_dir / "ablation", rows)
        return rows

    def _load_train(self, paths: RunPaths) -> FeatureBatch:
        return self.feature_store.read(paths.data_dir / TRAIN_FILE)

    def _load_eval_sets(self, config: ExperimentConfig, paths: RunPaths) -> Dict[str, FeatureBatch]:
        return {name: self.feature_store.read(paths.data_dir / name, allow_ood=True) for name in config.eval_files}


__all__ = ["ExperimentController", "RunPaths"]
