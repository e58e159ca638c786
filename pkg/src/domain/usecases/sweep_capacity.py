from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from application.services.detector import extract
from application.services.metrics import score_histograms
from application.services.postprocess import msp_score_full
from application.services.transformer import classify_max
from config.experiment import ExperimentConfig
from domain.errors import EmptyInput

from ..entities.features import FeatureBatch
from ..entities.value_objects import OodSources
from ..ports.services import TelemetrySink
from .train_detector import TrainDetector

logger = logging.getLogger("grodlab.sweep")

DEPTH_BUDGET = {"d_hat": 2, "heads": 2, "m_h": 1, "m_v": 1, "r": 4}
WIDTH_DEPTH = 2


def width_budget(width: int) -> Dict[str, int]:
    return {"d_hat": 2 * width, "heads": 1, "m_h": 1, "m_v": width, "r": 2 * width}


@dataclass(frozen=True)
class SweepPoint:
    """One swept architecture: a depth at the fixed budget, or a width at depth 2."""

    kind: str
    value: int
    depth: int
    budget: Dict[str, int]

    def overrides(self) -> Dict[str, Any]:
        return {"depth": self.depth, **self.budget}


@dataclass
class SweepResult:
    rows: List[Dict[str, Any]] = field(default_factory=list)
    histogram_rows: List[Dict[str, Any]] = field(default_factory=list)


def sweep_points(config: ExperimentConfig) -> List[SweepPoint]:
    points = [SweepPoint("depth", depth, depth, dict(DEPTH_BUDGET)) for depth in config.sweep_depths]
    points += [SweepPoint("width", width, WIDTH_DEPTH, width_budget(width)) for width in config.sweep_widths]
    return points


def accuracy(predictions: np.ndarray, targets: np.ndarray) -> Optional[float]:
    if targets.size == 0:
        return None
    return float(np.mean(predictions == targets))


class SweepCapacity:
    """Cross-entropy-only training over a range of depths/widths; how strongly OOD rows land in ID classes."""

    def __init__(self, trainer: Optional[TrainDetector] = None, telemetry: Optional[TelemetrySink] = None) -> None:
        self.trainer = trainer or TrainDetector(telemetry)
        self.telemetry = telemetry

    def execute(self, train: FeatureBatch, test: FeatureBatch, config: ExperimentConfig) -> SweepResult:
        points = sweep_points(config)
        if not points:
            raise EmptyInput("capacity sweep has no depths or widths to run")
        result = SweepResult()
        for point in points:
            run_config = config.with_overrides(
                gamma=0.0, ood_sources=OodSources.NONE, dump_fake_ood=False, **point.overrides()
            )
            for seed in config.run_seeds:
                row, histogram = self._run(point, train, test, run_config, seed)
                result.rows.append(row)
                result.histogram_rows.extend(histogram)
                if self.telemetry:
                    self.telemetry.record_metric("sweep.row", row)
                logger.info("Sweep row finished", extra=row)
        return result

    def _run(
        self,
        point: SweepPoint,
        train: FeatureBatch,
        test: FeatureBatch,
        config: ExperimentConfig,
        seed: int,
    ) -> Tuple[Dict[str, Any], List[Dict[str, Any]]]:
        num_classes = train.num_classes
        model = self.trainer.execute(train, config, seed).model
        _, train_logits = extract(model, train.features)
        _, test_logits = extract(model, test.features)
        train_labels, test_labels = train.hard_labels(), test.hard_labels()
        train_pred, test_pred = classify_max(train_logits), classify_max(test_logits)
        id_mask = test_labels < num_classes

        row: Dict[str, Any] = {
            "kind": point.kind,
            "value": point.value,
            "depth": point.depth,
            **point.budget,
            "seed": int(seed),
            "train_id_acc": accuracy(train_pred, train_labels),
            "test_id_acc": accuracy(test_pred[id_mask], test_labels[id_mask]),
            "ood_acc": accuracy(test_pred[~id_mask], test_labels[~id_mask]),
        }
        # likelihood bars: mean full-softmax MSP per true class, 1-based, OOD last
        scores = msp_score_full(test_logits)
        for label in range(num_classes + 1):
            mask = test_labels == label
            name = "score_ood" if label == num_classes else f"score_class{label + 1}"
            row[name] = float(np.mean(scores[mask])) if mask.any() else None

        histogram_rows: List[Dict[str, Any]] = []
        if id_mask.any() and (~id_mask).any():
            histogram = score_histograms(scores[id_mask], scores[~id_mask])
            edges = histogram["edges"]
            for b, (id_count, ood_count) in enumerate(zip(histogram["id"], histogram["ood"])):
                histogram_rows.append(
                    {
                        "kind": point.kind,
                        "value": point.value,
                        "seed": int(seed),
                        "bin": b,
                        "lower": edges[b],
                        "upper": edges[b + 1],
                        "id": int(id_count),
                        "ood": int(ood_count),
                    }
                )
        return row, histogram_rows


__all__ = ["SweepCapacity", "SweepPoint", "SweepResult", "sweep_points", "width_budget"]
