"""Dense linear-algebra primitives shared by projections, GROD and scoring."""

from __future__ import annotations

import numpy as np
from scipy import linalg
from scipy.special import softmax

from domain.errors import DimensionMismatch, NotPositiveDefinite, ShapeMismatch, TooFewSamples


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)


def regularized_inverse(sigma: np.ndarray, eps0: float = 1e-4) -> np.ndarray:
    """``(sigma + eps0 I)^-1`` through a Cholesky factor ``L``: ``(L^-1)^T L^-1``."""
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ShapeMismatch(f"expected a square matrix, got shape {sigma.shape}")
    regularized = symmetrize(sigma) + eps0 * np.eye(sigma.shape[0])
    if not np.all(np.isfinite(regularized)):
        raise NotPositiveDefinite("covariance has non-finite entries")
    try:
        lower = linalg.cholesky(regularized, lower=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"Cholesky factorization failed with eps0={eps0}") from exc
    lower_inv = linalg.solve_triangular(lower, np.eye(sigma.shape[0]), lower=True)
    return symmetrize(lower_inv.T @ lower_inv)


def mahalanobis_sq(x: np.ndarray, mu: np.ndarray, sigma_inv: np.ndarray) -> float:
    """Squared form ``(x - mu) S^-1 (x - mu)^T``; no square root."""
    x = np.asarray(x, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if x.shape != mu.shape or sigma_inv.shape != (x.shape[-1], x.shape[-1]):
        raise DimensionMismatch(f"x {x.shape}, mu {mu.shape}, sigma_inv {sigma_inv.shape}")
    delta = x - mu
    return max(0.0, float(delta @ sigma_inv @ delta))


def mahalanobis_sq_rows(rows: np.ndarray, mu: np.ndarray, sigma_inv: np.ndarray) -> np.ndarray:
    """Vectorized ``mahalanobis_sq`` over the rows of a matrix."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if rows.shape[1] != mu.shape[0] or sigma_inv.shape != (mu.shape[0], mu.shape[0]):
        raise DimensionMismatch(f"rows {rows.shape}, mu {mu.shape}, sigma_inv {sigma_inv.shape}")
    delta = rows - mu
    return np.maximum(0.0, np.einsum("ni,ij,nj->n", delta, sigma_inv, delta))


def sample_covariance(features: np.ndarray) -> np.ndarray:
    """Unbiased (``n - 1``) covariance of the rows."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 2:
        raise TooFewSamples(f"covariance needs at least 2 rows, got {features.shape[0] if features.ndim else 0}")
    centered = features - features.mean(axis=0)
    return symmetrize(centered.T @ centered / (features.shape[0] - 1))


def covariance_or_floor(features: np.ndarray, eps0: float) -> np.ndarray:
    """``sample_covariance`` with ``eps0 I`` substituted for fewer than 2 rows."""
    try:
        return sample_covariance(features)
    except TooFewSamples:
        return eps0 * np.eye(np.asarray(features).shape[1])


def column_softmax(matrix: np.ndarray) -> np.ndarray:
    return softmax(np.asarray(matrix, dtype=np.float64), axis=0)


__all__ = [
    "regularized_inverse",
    "mahalanobis_sq",
    "mahalanobis_sq_rows",
    "sample_covariance",
    "covariance_or_floor",
    "column_softmax",
    "symmetrize",
]
