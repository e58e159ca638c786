from __future__ import annotations

import logging
from typing import Any, Dict, List, Mapping, Optional

import numpy as np

from config.experiment import ExperimentConfig

from ..entities.features import FeatureBatch
from ..entities.scores import MetricSummary
from ..ports.services import TelemetrySink
from .evaluate_detector import EvaluateDetector
from .ingest_features import baseline_config
from .train_detector import TrainDetector

logger = logging.getLogger("grodlab.ablate")


def mean_metrics(summaries: List[MetricSummary]) -> Dict[str, float]:
    keys = summaries[0].as_dict().keys()
    return {key: float(np.mean([s.as_dict()[key] for s in summaries])) for key in keys}


class AblateHyperparameters:
    """Grid over the fake-OOD spread ``a`` and loss weight ``gamma``; seed-mean metrics per cell."""

    def __init__(
        self,
        trainer: Optional[TrainDetector] = None,
        evaluator: Optional[EvaluateDetector] = None,
        telemetry: Optional[TelemetrySink] = None,
    ) -> None:
        self.trainer = trainer or TrainDetector(telemetry)
        self.evaluator = evaluator or EvaluateDetector()
        self.telemetry = telemetry

    def execute(
        self,
        train: FeatureBatch,
        eval_sets: Mapping[str, FeatureBatch],
        config: ExperimentConfig,
        head_only: bool = False,
    ) -> List[Dict[str, Any]]:
        rows = [self._cell("baseline", None, None, baseline_config(config), train, eval_sets, head_only)]
        for a in config.ablation_a:
            for gamma in config.ablation_gamma:
                cell = config.with_overrides(a=a, gamma=gamma, dump_fake_ood=False)
                rows.append(self._cell("grod", a, gamma, cell, train, eval_sets, head_only))
        return rows

    def _cell(
        self,
        method: str,
        a: Optional[float],
        gamma: Optional[float],
        config: ExperimentConfig,
        train: FeatureBatch,
        eval_sets: Mapping[str, FeatureBatch],
        head_only: bool,
    ) -> Dict[str, Any]:
        summaries = []
        for seed in config.run_seeds:
            model = self.trainer.execute(train, config, seed, head_only=head_only).model
            summaries.append(self.evaluator.execute(model, train, eval_sets, config, seed).report.metrics)
        row: Dict[str, Any] = {
            "method": method,
            "a": a,
            "gamma": gamma,
            "scorer": config.scorer.value,
            "seeds": len(summaries),
            **mean_metrics(summaries),
        }
        if self.telemetry:
            self.telemetry.record_metric("ablate.cell", row)
        logger.info("Ablation cell finished", extra=row)
        return row


__all__ = ["AblateHyperparameters", "mean_metrics"]
