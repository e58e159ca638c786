from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import LengthMismatch, ShapeMismatch


@dataclass
class FeatureBatch:
    """An ``n x s`` feature matrix with per-row labels.

    ``labels`` is either a vector of zero-based hard labels (``0..K``, where
    ``K`` marks OOD) or an ``n x (K+1)`` matrix of soft label rows.
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels)
        if self.features.ndim != 2:
            raise ShapeMismatch(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.shape[0] != self.features.shape[0]:
            raise LengthMismatch(
                f"{self.features.shape[0]} feature rows but {self.labels.shape[0]} labels"
            )
        if self.labels.ndim == 2 and self.labels.shape[1] != self.num_classes + 1:
            raise ShapeMismatch(f"soft labels must have {self.num_classes + 1} columns")

    @property
    def rows(self) -> int:
        return int(self.features.shape[0])

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def is_soft(self) -> bool:
        return self.labels.ndim == 2

    def hard_labels(self) -> np.ndarray:
        if self.is_soft:
            return np.argmax(self.labels, axis=1)
        return self.labels.astype(np.int64)

    def label_matrix(self) -> np.ndarray:
        """Label rows over ``K+1`` entries (one-hot for hard labels)."""
        if self.is_soft:
            return self.labels.astype(np.float64)
        return one_hot(self.labels.astype(np.int64), self.num_classes + 1)

    def class_counts(self) -> np.ndarray:
        hard = self.hard_labels()
        return np.bincount(hard[hard < self.num_classes], minlength=self.num_classes)

    def subset(self, mask_or_index: np.ndarray) -> "FeatureBatch":
        return FeatureBatch(self.features[mask_or_index], self.labels[mask_or_index], self.num_classes)

    def id_only(self) -> "FeatureBatch":
        return self.subset(self.hard_labels() < self.num_classes)

    def ood_only(self) -> "FeatureBatch":
        return self.subset(self.hard_labels() == self.num_classes)

    @classmethod
    def concat(cls, batches: list["FeatureBatch"], num_classes: Optional[int] = None) -> "FeatureBatch":
        if not batches:
            raise ValueError("Nothing to concatenate")
        k = num_classes if num_classes is not None else batches[0].num_classes
        return cls(
            np.concatenate([b.features for b in batches], axis=0),
            np.concatenate([b.labels for b in batches], axis=0),
            k,
        )


def one_hot(labels: np.ndarray, width: int) -> np.ndarray:
    out = np.zeros((labels.shape[0], width), dtype=np.float64)
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out
