from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .scores import MetricSummary

REPORT_SCHEMA_VERSION = 1


@dataclass
class EvaluationReport:
    """Everything ``eval``/``ingest`` emit for one run; no timestamps."""

    config_hash: str
    seed: int
    task: str
    scorer: str
    threshold: float
    metrics: MetricSummary
    per_set: Dict[str, MetricSummary] = field(default_factory=dict)
    score_histograms: Dict[str, Dict[str, List[float]]] = field(default_factory=dict)
    baseline: Optional[MetricSummary] = None
    schema_version: int = REPORT_SCHEMA_VERSION


@dataclass
class TrainingSummary:
    """Outcome of one training run: epoch log plus the selected epoch."""

    epochs: List[Dict[str, Any]] = field(default_factory=list)
    best_epoch: int = 0
    best_validation_auroc: Optional[float] = None
    checkpoint_path: Optional[str] = None

    @property
    def epoch_losses(self) -> List[float]:
        return [float(entry["loss"]) for entry in self.epochs]
