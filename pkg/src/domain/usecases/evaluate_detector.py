from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional

import numpy as np

from application.services.detector import extract
from application.services.metrics import score_histograms, summarize
from application.services.postprocess import (
    adjust_logits,
    build_score_report,
    compute_scores,
    pick_threshold,
    vim_calibrate,
)
from config.experiment import ExperimentConfig
from domain.errors import EmptyClass

from ..entities.features import FeatureBatch
from ..entities.model import TransformerModel
from ..entities.report import EvaluationReport
from ..entities.scores import ScoreReport, VimCalibration
from ..entities.value_objects import ScorerType

logger = logging.getLogger("grodlab.eval")


@dataclass
class EvaluationResult:
    report: EvaluationReport
    score_reports: Dict[str, ScoreReport] = field(default_factory=dict)
    labels: Dict[str, np.ndarray] = field(default_factory=dict)

    def score_rows(self, name: str) -> List[Dict[str, object]]:
        """Per-sample rows (1-based labels) for a plot-ready score dump."""
        scores = self.score_reports[name]
        return [
            {"label": int(label) + 1, "score": float(score), "prediction": int(prediction) + 1}
            for label, score, prediction in zip(self.labels[name], scores.scores, scores.predictions)
        ]


class EvaluateDetector:
    """Inference stage: features and logits, adjusted logits, scores, threshold, metrics per OOD set."""

    def execute(
        self,
        model: TransformerModel,
        train: FeatureBatch,
        eval_sets: Mapping[str, FeatureBatch],
        config: ExperimentConfig,
        seed: int,
        scorer: Optional[ScorerType] = None,
    ) -> EvaluationResult:
        if not eval_sets:
            raise EmptyClass("no evaluation sets given")
        scorer = scorer or config.scorer
        num_classes = model.num_classes
        calibration = self._calibrate(model, train, scorer, config) if scorer is ScorerType.VIM else None

        scored: Dict[str, np.ndarray] = {}
        logits_by_set: Dict[str, np.ndarray] = {}
        labels_by_set: Dict[str, np.ndarray] = {}
        for name, batch in eval_sets.items():
            features, logits = extract(model, batch.features)
            scored[name] = compute_scores(scorer, logits, features, calibration, config.temperature)
            logits_by_set[name] = logits
            labels_by_set[name] = batch.hard_labels()

        id_pool = np.concatenate([scored[n][labels_by_set[n] < num_classes] for n in eval_sets])
        ood_pool = np.concatenate([scored[n][labels_by_set[n] == num_classes] for n in eval_sets])
        threshold = pick_threshold(id_pool, config.tpr)

        per_set = {}
        histograms = {}
        score_reports = {}
        id_predictions, id_truth = [], []
        for name in eval_sets:
            labels = labels_by_set[name]
            id_mask = labels < num_classes
            score_reports[name] = build_score_report(logits_by_set[name], scored[name], threshold)
            predictions = np.argmax(logits_by_set[name][:, :num_classes], axis=1)
            if id_mask.any() and not id_mask.all():
                per_set[name] = summarize(
                    scored[name][id_mask], scored[name][~id_mask], predictions[id_mask], labels[id_mask], config.tpr
                )
                histograms[name] = score_histograms(scored[name][id_mask], scored[name][~id_mask])
            id_predictions.append(predictions[id_mask])
            id_truth.append(labels[id_mask])

        metrics = summarize(id_pool, ood_pool, np.concatenate(id_predictions), np.concatenate(id_truth), config.tpr)
        logger.info("Evaluation finished", extra={"scorer": scorer.value, **metrics.as_dict()})
        report = EvaluationReport(
            config_hash=config.config_hash(),
            seed=int(seed),
            task=config.task.value,
            scorer=scorer.value,
            threshold=threshold,
            metrics=metrics,
            per_set=per_set,
            score_histograms=histograms,
        )
        return EvaluationResult(report=report, score_reports=score_reports, labels=labels_by_set)

    @staticmethod
    def _calibrate(
        model: TransformerModel,
        train: FeatureBatch,
        scorer: ScorerType,
        config: ExperimentConfig,
    ) -> VimCalibration:
        features, logits = extract(model, train.features)
        return vim_calibrate(features, adjust_logits(logits), config.vim_dim)


__all__ = ["EvaluateDetector", "EvaluationResult"]
