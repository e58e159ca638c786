"""OOD evaluation metrics. ID is the positive class and higher scores mean more ID."""

from __future__ import annotations

from typing import Dict, List, Optional

import numpy as np
from sklearn.metrics import average_precision_score, roc_auc_score

from domain.entities.scores import MetricSummary
from domain.errors import EmptyClass, LengthMismatch

from .postprocess import pick_threshold

HISTOGRAM_BINS = 20


def _pair(positive: np.ndarray, negative: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    positive = np.asarray(positive, dtype=np.float64).ravel()
    negative = np.asarray(negative, dtype=np.float64).ravel()
    if positive.size == 0 or negative.size == 0:
        raise EmptyClass(f"need scores for both classes, got {positive.size} and {negative.size}")
    scores = np.concatenate([positive, negative])
    truth = np.concatenate([np.ones(positive.size, dtype=np.int64), np.zeros(negative.size, dtype=np.int64)])
    return truth, scores


def auroc(id_scores: np.ndarray, ood_scores: np.ndarray) -> float:
    """P(ID score > OOD score) with ties credited 0.5."""
    truth, scores = _pair(id_scores, ood_scores)
    return float(roc_auc_score(truth, scores))


def fpr_at_tpr(id_scores: np.ndarray, ood_scores: np.ndarray, tpr: float = 0.95) -> float:
    ood = np.asarray(ood_scores, dtype=np.float64).ravel()
    if np.asarray(id_scores).size == 0 or ood.size == 0:
        raise EmptyClass("FPR needs both ID and OOD scores")
    threshold = pick_threshold(id_scores, tpr)
    return float(np.mean(ood >= threshold))


def aupr(pos_scores: np.ndarray, neg_scores: np.ndarray) -> float:
    """Step-interpolated area under the precision-recall curve."""
    truth, scores = _pair(pos_scores, neg_scores)
    return float(average_precision_score(truth, scores))


def aupr_in(id_scores: np.ndarray, ood_scores: np.ndarray) -> float:
    return aupr(id_scores, ood_scores)


def aupr_out(id_scores: np.ndarray, ood_scores: np.ndarray) -> float:
    return aupr(-np.asarray(ood_scores, dtype=np.float64), -np.asarray(id_scores, dtype=np.float64))


def id_accuracy(
    predictions: np.ndarray,
    labels: np.ndarray,
    restricted_to_id: bool = True,
    num_classes: Optional[int] = None,
) -> float:
    """Fraction correct; with ``restricted_to_id`` only rows labelled ``< num_classes`` count."""
    predictions = np.asarray(predictions).ravel()
    labels = np.asarray(labels).ravel()
    if predictions.size != labels.size:
        raise LengthMismatch(f"{predictions.size} predictions for {labels.size} labels")
    if restricted_to_id and num_classes is not None:
        keep = labels < num_classes
        predictions, labels = predictions[keep], labels[keep]
    if labels.size == 0:
        raise EmptyClass("no ID rows to score")
    return float(np.mean(predictions == labels))


def summarize(
    id_scores: np.ndarray,
    ood_scores: np.ndarray,
    id_predictions: np.ndarray,
    id_labels: np.ndarray,
    tpr: float = 0.95,
) -> MetricSummary:
    return MetricSummary(
        id_acc=id_accuracy(id_predictions, id_labels, restricted_to_id=False),
        fpr_at_95=fpr_at_tpr(id_scores, ood_scores, tpr),
        auroc=auroc(id_scores, ood_scores),
        aupr_in=aupr_in(id_scores, ood_scores),
        aupr_out=aupr_out(id_scores, ood_scores),
    )


def score_histograms(id_scores: np.ndarray, ood_scores: np.ndarray, bins: int = HISTOGRAM_BINS) -> Dict[str, List[float]]:
    """Plot-ready counts of both score sets over shared edges spanning the pooled range."""
    id_scores = np.asarray(id_scores, dtype=np.float64).ravel()
    ood_scores = np.asarray(ood_scores, dtype=np.float64).ravel()
    edges = np.histogram_bin_edges(np.concatenate([id_scores, ood_scores]), bins=bins)
    id_counts, _ = np.histogram(id_scores, bins=edges)
    ood_counts, _ = np.histogram(ood_scores, bins=edges)
    return {
        "edges": [float(edge) for edge in edges],
        "id": [int(count) for count in id_counts],
        "ood": [int(count) for count in ood_counts],
    }


__all__ = [
    "auroc",
    "fpr_at_tpr",
    "aupr",
    "aupr_in",
    "aupr_out",
    "id_accuracy",
    "summarize",
    "score_histograms",
    "HISTOGRAM_BINS",
]
