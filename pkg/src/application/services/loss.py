"""Composite loss ``(1 - gamma) L1 + gamma L2`` over ``K+1`` logits.

``L1`` is the cross-entropy over all ``K+1`` classes; ``L2`` is the binary
cross-entropy after collapsing labels and predictions to (ID mass, OOD mass).
Batched inputs are reduced with the mean over rows.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np
from scipy.special import log_softmax, logsumexp, softmax

LOG_CLAMP = 1e-12


def _as_rows(labels: np.ndarray, logits: np.ndarray) -> Tuple[np.ndarray, np.ndarray, bool]:
    labels = np.asarray(labels, dtype=np.float64)
    logits = np.asarray(logits, dtype=np.float64)
    single = logits.ndim == 1
    labels, logits = np.atleast_2d(labels), np.atleast_2d(logits)
    if labels.shape != logits.shape:
        raise ValueError(f"labels {labels.shape} and logits {logits.shape} disagree")
    return labels, logits, single


def collapse(distribution: np.ndarray) -> np.ndarray:
    """``[sum of the first K entries, last entry]`` per row."""
    distribution = np.atleast_2d(distribution)
    return np.stack([distribution[:, :-1].sum(axis=1), distribution[:, -1]], axis=1)


def _binary_probabilities(logits: np.ndarray) -> np.ndarray:
    total = logsumexp(logits, axis=1)
    p_in = np.exp(logsumexp(logits[:, :-1], axis=1) - total)
    p_out = np.exp(logits[:, -1] - total)
    return np.stack([p_in, p_out], axis=1)


def loss_l1(labels: np.ndarray, logits: np.ndarray) -> float:
    labels, logits, _ = _as_rows(labels, logits)
    return float(np.mean(-(labels * log_softmax(logits, axis=1)).sum(axis=1)))


def loss_l2(labels: np.ndarray, logits: np.ndarray) -> float:
    labels, logits, _ = _as_rows(labels, logits)
    target = collapse(labels)
    predicted = np.maximum(_binary_probabilities(logits), LOG_CLAMP)
    return float(np.mean(-(target * np.log(predicted)).sum(axis=1)))


def loss_total(labels: np.ndarray, logits: np.ndarray, gamma: float) -> float:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    return (1.0 - gamma) * loss_l1(labels, logits) + gamma * loss_l2(labels, logits)


def loss_grad_logits(labels: np.ndarray, logits: np.ndarray, gamma: float) -> np.ndarray:
    """Gradient of ``loss_total`` w.r.t. the logits (per row of the batch mean)."""
    labels, logits, single = _as_rows(labels, logits)
    n, width = logits.shape
    probs = softmax(logits, axis=1)
    grad_l1 = probs * labels.sum(axis=1, keepdims=True) - labels

    target = collapse(labels)
    binary = _binary_probabilities(logits)
    # clamped branches are constant, so they contribute no gradient
    unclamped = binary > LOG_CLAMP
    coeff = np.where(unclamped, -target / np.where(unclamped, binary, 1.0), 0.0)
    id_mask = np.zeros(width)
    id_mask[:-1] = 1.0
    ood_mask = 1.0 - id_mask
    d_in = probs * id_mask - binary[:, :1] * probs
    d_out = probs * ood_mask - binary[:, 1:] * probs
    grad_l2 = coeff[:, :1] * d_in + coeff[:, 1:] * d_out

    grad = ((1.0 - gamma) * grad_l1 + gamma * grad_l2) / n
    return grad[0] if single else grad


__all__ = ["collapse", "loss_l1", "loss_l2", "loss_total", "loss_grad_logits", "LOG_CLAMP"]
