"""PCA / per-class LDA projections and boundary-sample mining."""

from __future__ import annotations

from typing import List

import numpy as np
from scipy import linalg

from domain.entities.projection import BoundarySet, ProjectionBasis
from domain.entities.value_objects import ProjectionKind
from domain.errors import DegenerateScatter, EmptyInput, TooFewSamples

from .numerics import sample_covariance, symmetrize


def _fix_signs(axes: np.ndarray) -> np.ndarray:
    """First nonzero component of every axis made positive."""
    fixed = axes.copy()
    for row in fixed:
        nonzero = np.flatnonzero(np.abs(row) > 1e-12)
        if nonzero.size and row[nonzero[0]] < 0:
            row *= -1.0
    return fixed


def pca_fit(features: np.ndarray, p: int) -> ProjectionBasis:
    features = np.asarray(features, dtype=np.float64)
    n, s = features.shape
    if n < 2:
        raise TooFewSamples(f"PCA needs at least 2 rows, got {n}")
    if not 1 <= p <= min(n - 1, s):
        raise ValueError(f"p must lie in [1, {min(n - 1, s)}], got {p}")
    eigenvalues, eigenvectors = np.linalg.eigh(sample_covariance(features))
    order = np.argsort(-eigenvalues, kind="stable")[:p]
    axes = _fix_signs(eigenvectors[:, order].T)
    return ProjectionBasis(ProjectionKind.PCA, axes, features.mean(axis=0))


def lda_fit(features: np.ndarray, labels: np.ndarray, p: int, eps0: float = 1e-4) -> List[ProjectionBasis]:
    """Fisher axes from between/within scatter; one basis per class present.

    Only classes with at least two rows take part.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels).astype(np.int64)
    classes = [int(c) for c in np.unique(labels) if np.count_nonzero(labels == c) >= 2]
    if len(classes) < 2:
        raise TooFewSamples("LDA needs at least 2 classes with 2 or more rows each")
    if not 1 <= p <= len(classes) - 1:
        raise ValueError(f"p must lie in [1, {len(classes) - 1}], got {p}")

    mask = np.isin(labels, classes)
    pooled = features[mask]
    overall_mean = pooled.mean(axis=0)
    s = features.shape[1]
    within = np.zeros((s, s))
    between = np.zeros((s, s))
    for c in classes:
        rows = features[labels == c]
        class_mean = rows.mean(axis=0)
        centered = rows - class_mean
        within += centered.T @ centered
        offset = (class_mean - overall_mean)[:, None]
        between += rows.shape[0] * (offset @ offset.T)
    within = symmetrize(within) + eps0 * np.eye(s)

    try:
        eigenvalues, eigenvectors = linalg.eigh(symmetrize(between), within)
    except linalg.LinAlgError as exc:
        raise DegenerateScatter("within-class scatter is not invertible after regularization") from exc
    order = np.argsort(-eigenvalues, kind="stable")[:p]
    axes = eigenvectors[:, order].T
    axes = axes / np.linalg.norm(axes, axis=1, keepdims=True)
    axes = _fix_signs(axes)
    return [ProjectionBasis(ProjectionKind.LDA, axes, overall_mean, class_id=c) for c in classes]


def mine_boundary(features: np.ndarray, basis: ProjectionBasis) -> BoundarySet:
    """Rows attaining the max and min along every axis (preimages, never reconstructions)."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise EmptyInput("boundary mining needs a nonempty feature matrix")
    projected = basis.project(features)
    picked: List[int] = []
    for j in range(projected.shape[1]):
        for index in (int(np.argmax(projected[:, j])), int(np.argmin(projected[:, j]))):
            if index not in picked:
                picked.append(index)
    indices = np.asarray(picked, dtype=np.int64)
    return BoundarySet(points=features[indices].copy(), indices=indices, source=basis.provenance)


__all__ = ["pca_fit", "lda_fit", "mine_boundary"]
