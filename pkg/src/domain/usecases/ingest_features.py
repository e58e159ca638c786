from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Optional

from config.experiment import ExperimentConfig

from ..entities.features import FeatureBatch
from ..entities.report import EvaluationReport
from ..entities.value_objects import OodSources, ScorerType
from ..ports.services import TelemetrySink
from .evaluate_detector import EvaluateDetector, EvaluationResult
from .train_detector import TrainDetector, TrainingResult

logger = logging.getLogger("grodlab.ingest")


def baseline_config(config: ExperimentConfig) -> ExperimentConfig:
    """Plain cross-entropy training scored with MSP."""
    return config.with_overrides(gamma=0.0, ood_sources=OodSources.NONE, scorer=ScorerType.MSP, dump_fake_ood=False)


@dataclass
class IngestResult:
    report: EvaluationReport
    evaluation: EvaluationResult
    training: TrainingResult
    baseline: EvaluationResult


class IngestFeatures:
    """Classifier head plus GROD on externally supplied features, next to an MSP baseline head."""

    def __init__(
        self,
        trainer: Optional[TrainDetector] = None,
        evaluator: Optional[EvaluateDetector] = None,
        telemetry: Optional[TelemetrySink] = None,
    ) -> None:
        self.trainer = trainer or TrainDetector(telemetry)
        self.evaluator = evaluator or EvaluateDetector()

    def execute(
        self,
        train: FeatureBatch,
        eval_sets: Mapping[str, FeatureBatch],
        config: ExperimentConfig,
        seed: int,
    ) -> IngestResult:
        training = self.trainer.execute(train, config, seed, head_only=True)
        evaluation = self.evaluator.execute(training.model, train, eval_sets, config, seed)

        plain = baseline_config(config)
        baseline_model = self.trainer.execute(train, plain, seed, head_only=True).model
        baseline = self.evaluator.execute(baseline_model, train, eval_sets, plain, seed)

        evaluation.report.baseline = baseline.report.metrics
        logger.info(
            "Ingest finished",
            extra={
                "auroc": evaluation.report.metrics.auroc,
                "baseline_auroc": baseline.report.metrics.auroc,
            },
        )
        return IngestResult(report=evaluation.report, evaluation=evaluation, training=training, baseline=baseline)


__all__ = ["IngestFeatures", "IngestResult", "baseline_config"]
