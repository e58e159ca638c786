from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from ..errors import UninitializedState
from .value_objects import OodSources, Provenance


@dataclass(frozen=True)
class GrodConfig:
    """Hyperparameters of the outlier engine."""

    a: float = 0.1
    gamma: float = 0.1
    gamma_opt: float = 0.1
    num: Optional[int] = None
    warmup_batches: int = 5
    lambda_filter: float = 0.1
    eps: float = 1e-7
    eps0: float = 1e-4
    pca_axes: int = 8
    lda_axes: int = 4
    sources: OodSources = OodSources.PCA_LDA
    learn_lambda: bool = False
    # a is read as a fraction of the tracked feature scale rather than in raw units
    relative_extension: bool = True

    def __post_init__(self) -> None:
        if not self.a > 0:
            raise ValueError("a must be > 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not 0.0 < self.gamma_opt <= 1.0:
            raise ValueError("gamma_opt must lie in (0, 1]")
        if self.lambda_filter < 0:
            raise ValueError("lambda_filter must be >= 0")
        if self.warmup_batches < 0:
            raise ValueError("warmup_batches must be >= 0")
        if self.pca_axes < 1 or self.lda_axes < 1:
            raise ValueError("pca_axes and lda_axes must be >= 1")
        if self.num is not None and self.num < 1:
            raise ValueError("num must be >= 1")

    def samples_per_group(self, batch_size: int, kappa: int) -> int:
        if self.num is not None:
            return int(self.num)
        return max(8, math.ceil(batch_size / (kappa + 1)))


@dataclass
class GrodState:
    """EMA-tracked centers, covariances and ID reference distances."""

    mu_pca: Optional[np.ndarray] = None
    cov_pca: Optional[np.ndarray] = None
    dist_id_pca: float = 0.0
    mu_lda: Dict[int, np.ndarray] = field(default_factory=dict)
    cov_lda: Dict[int, np.ndarray] = field(default_factory=dict)
    dist_id_lda: Dict[int, float] = field(default_factory=dict)
    batch_index: int = 0
    lambda_filter: float = 0.1
    warmup_features: List[np.ndarray] = field(default_factory=list)
    warmup_labels: List[np.ndarray] = field(default_factory=list)

    @property
    def initialized(self) -> bool:
        return self.mu_pca is not None and self.cov_pca is not None

    def require_ready(self) -> None:
        if not self.initialized:
            raise UninitializedState("GROD state has not been initialized by the warmup path")

    def known_classes(self) -> List[int]:
        return sorted(self.mu_lda)

    def copy(self) -> "GrodState":
        return copy.deepcopy(self)


@dataclass
class OodCenters:
    """Extended boundary points with the group each one came from."""

    points: np.ndarray
    provenance: List[Provenance]

    def __len__(self) -> int:
        return int(self.points.shape[0])


@dataclass
class FakeOodBatch:
    points: np.ndarray
    soft_labels: np.ndarray
    provenance: List[Provenance]
    nearest_class: List[Optional[int]] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.points.shape[0])


@dataclass
class FilterResult:
    """Outcome of Mahalanobis filtering plus random downsampling."""

    points: np.ndarray
    provenance: List[Provenance]
    nearest_class: List[Optional[int]]
    dist_ood: np.ndarray
    dist_id: np.ndarray
    margin: float
    candidates: int
    deleted: int


@dataclass
class AugmentedBatch:
    """``F_all`` / ``Y_all``: ID rows first, then retained fake OOD."""

    features: np.ndarray
    labels: np.ndarray
    num_id: int
    fake: Optional[FakeOodBatch] = None
    warmup: bool = False

    @property
    def num_fake(self) -> int:
        return 0 if self.fake is None else len(self.fake)
