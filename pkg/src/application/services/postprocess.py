"""Inference-time post-processing: logit adjustment, OOD scores, thresholds."""

from __future__ import annotations

from typing import Optional

import numpy as np
from scipy.special import logsumexp, softmax
from sklearn.covariance import EmpiricalCovariance

from domain.entities.scores import ScoreReport, VimCalibration
from domain.entities.value_objects import ScorerType
from domain.errors import DegenerateFeatures, EmptyInput, TooFewSamples

RESIDUAL_FLOOR = 1e-12


def adjust_logits(raw: np.ndarray, num_classes: Optional[int] = None) -> np.ndarray:
    """Rows whose argmax is the OOD slot become uniform ``1/K``; others keep a softmax over the first K."""
    raw = np.atleast_2d(np.asarray(raw, dtype=np.float64))
    k = raw.shape[1] - 1 if num_classes is None else int(num_classes)
    if raw.shape[1] != k + 1:
        raise ValueError(f"expected {k + 1} logit columns, got {raw.shape[1]}")
    adjusted = softmax(raw[:, :k], axis=1)
    ood_rows = np.argmax(raw, axis=1) == k
    adjusted[ood_rows] = 1.0 / k
    return adjusted


def msp_score(adjusted: np.ndarray) -> np.ndarray:
    return np.max(np.atleast_2d(adjusted), axis=1)


def msp_score_full(raw: np.ndarray) -> np.ndarray:
    """Largest ID probability of the softmax taken over all ``K+1`` logits."""
    probs = softmax(np.atleast_2d(np.asarray(raw, dtype=np.float64)), axis=1)
    return probs[:, :-1].max(axis=1)


def energy_score(logits: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    return temperature * logsumexp(logits / temperature, axis=1)


def default_principal_dim(dim: int) -> int:
    return dim // 2 if dim <= 16 else min(dim - 1, 64)


def vim_calibrate(
    train_features: np.ndarray,
    train_logits: np.ndarray,
    principal_dim: Optional[int] = None,
) -> VimCalibration:
    """Principal ID subspace and the scale matching residual norms to max logits."""
    features = np.asarray(train_features, dtype=np.float64)
    logits = np.atleast_2d(np.asarray(train_logits, dtype=np.float64))
    n, s = features.shape
    d_prime = default_principal_dim(s) if principal_dim is None else int(principal_dim)
    if not 0 <= d_prime <= s:
        raise ValueError(f"principal_dim must lie in [0, {s}], got {d_prime}")
    if n < d_prime + 1:
        raise TooFewSamples(f"VIM calibration needs at least {d_prime + 1} rows, got {n}")

    mean = features.mean(axis=0)
    estimator = EmpiricalCovariance(assume_centered=True).fit(features - mean)
    eigenvalues, eigenvectors = np.linalg.eigh(estimator.covariance_)
    order = np.argsort(-eigenvalues, kind="stable")[:d_prime]
    basis = np.ascontiguousarray(eigenvectors[:, order])

    centered = features - mean
    residuals = np.linalg.norm(centered - centered @ basis @ basis.T, axis=1)
    scale = max(1.0, float(np.abs(centered).max()))
    if residuals.sum() <= RESIDUAL_FLOOR * scale * n:
        raise DegenerateFeatures(f"all residuals vanish outside a {d_prime}-dim principal subspace; reduce d'")
    alpha = float(logits.max(axis=1).sum() / residuals.sum())
    if not np.isfinite(alpha) or alpha <= 0:
        raise DegenerateFeatures(f"VIM scale must be finite and positive, got {alpha}")
    return VimCalibration(principal_basis=basis, feature_mean=mean, alpha=alpha)


def vim_score(features: np.ndarray, adjusted: np.ndarray, calibration: VimCalibration) -> np.ndarray:
    adjusted = np.atleast_2d(np.asarray(adjusted, dtype=np.float64))
    return logsumexp(adjusted, axis=1) - calibration.alpha * calibration.residual(features)


def pick_threshold(id_scores: np.ndarray, tpr: float = 0.95) -> float:
    """Lower order statistic so that at least ``tpr`` of the ID scores are ``>=`` it."""
    scores = np.asarray(id_scores, dtype=np.float64).ravel()
    if scores.size == 0:
        raise EmptyInput("threshold selection needs at least one ID score")
    if not 0.0 < tpr <= 1.0:
        raise ValueError("tpr must lie in (0, 1]")
    return float(np.quantile(scores, 1.0 - tpr, method="lower"))


def compute_scores(
    scorer: ScorerType,
    raw_logits: np.ndarray,
    features: Optional[np.ndarray] = None,
    calibration: Optional[VimCalibration] = None,
    temperature: float = 1.0,
) -> np.ndarray:
    """Scores (higher = more ID) of the chosen scorer over adjusted logits."""
    adjusted = adjust_logits(raw_logits)
    if scorer is ScorerType.MSP:
        return msp_score(adjusted)
    if scorer is ScorerType.ENERGY:
        return energy_score(adjusted, temperature)
    if calibration is None or features is None:
        raise ValueError("the vim scorer needs features and a calibration")
    return vim_score(features, adjusted, calibration)


def build_score_report(raw_logits: np.ndarray, scores: np.ndarray, threshold: float) -> ScoreReport:
    """Predictions: OOD label ``K`` iff ``score < threshold``, else the ID argmax."""
    raw_logits = np.atleast_2d(np.asarray(raw_logits, dtype=np.float64))
    k = raw_logits.shape[1] - 1
    scores = np.asarray(scores, dtype=np.float64)
    predictions = np.where(scores < threshold, k, np.argmax(raw_logits[:, :k], axis=1))
    return ScoreReport(
        scores=scores,
        adjusted_logits=adjust_logits(raw_logits),
        predictions=predictions.astype(np.int64),
        threshold=float(threshold),
    )


__all__ = [
    "adjust_logits",
    "msp_score",
    "msp_score_full",
    "energy_score",
    "default_principal_dim",
    "vim_calibrate",
    "vim_score",
    "pick_threshold",
    "compute_scores",
    "build_score_report",
]
