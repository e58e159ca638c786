from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .value_objects import ProjectionKind, Provenance


@dataclass(frozen=True)
class ProjectionBasis:
    """Projection axes (``p x s``) plus the mean used to center inputs."""

    kind: ProjectionKind
    axes: np.ndarray
    mean: np.ndarray
    class_id: Optional[int] = None

    @property
    def num_axes(self) -> int:
        return int(self.axes.shape[0])

    @property
    def provenance(self) -> Provenance:
        if self.kind is ProjectionKind.PCA:
            return Provenance.pca()
        assert self.class_id is not None
        return Provenance.lda(self.class_id)

    def project(self, features: np.ndarray) -> np.ndarray:
        return (features - self.mean) @ self.axes.T


@dataclass(frozen=True)
class BoundarySet:
    """Boundary rows of a feature batch; ``indices`` point into that batch."""

    points: np.ndarray
    indices: np.ndarray
    source: Provenance

    def __len__(self) -> int:
        return int(self.points.shape[0])
