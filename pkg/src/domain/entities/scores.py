from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Dict

import numpy as np


@dataclass
class ScoreReport:
    """Scores (higher = more ID), adjusted logits and score-based predictions."""

    scores: np.ndarray
    adjusted_logits: np.ndarray
    predictions: np.ndarray
    threshold: float


@dataclass(frozen=True)
class VimCalibration:
    principal_basis: np.ndarray  # (s, d') orthonormal columns
    feature_mean: np.ndarray
    alpha: float

    def residual(self, features: np.ndarray) -> np.ndarray:
        centered = np.atleast_2d(features) - self.feature_mean
        projected = centered @ self.principal_basis @ self.principal_basis.T
        return np.linalg.norm(centered - projected, axis=1)


@dataclass(frozen=True)
class MetricSummary:
    id_acc: float
    fpr_at_95: float
    auroc: float
    aupr_in: float
    aupr_out: float

    def as_dict(self) -> Dict[str, float]:
        return {key: float(value) for key, value in asdict(self).items()}
