"""GROD outlier engine: boundary mining, fake-OOD synthesis, filtering, soft labels.

Every function that changes the tracked statistics works on a copy of the
``GrodState`` it receives and returns the new state.
"""

from __future__ import annotations

import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import softmax

from domain.entities.features import one_hot
from domain.entities.grod import AugmentedBatch, FakeOodBatch, FilterResult, GrodConfig, GrodState, OodCenters
from domain.entities.projection import BoundarySet
from domain.entities.value_objects import ProjectionKind, Provenance
from domain.errors import AllFiltered, EmptyInput

from .numerics import covariance_or_floor, mahalanobis_sq_rows, regularized_inverse
from .projections import lda_fit, mine_boundary, pca_fit
from .seeding import SeedLike, make_rng

logger = logging.getLogger("grodlab.grod")

FILTER_SCALE = 10.0


def new_state(config: GrodConfig) -> GrodState:
    return GrodState(lambda_filter=config.lambda_filter)


def select_classes(class_counts: Sequence[int], batch_size: int, num_classes: int) -> Tuple[int, List[int]]:
    """``kappa = min(|eligible|, max(1, floor(2B/K)))``; the kappa largest eligible classes, returned sorted."""
    counts = [int(c) for c in class_counts]
    eligible = [i for i, count in enumerate(counts) if count > 1]
    kappa = min(len(eligible), max(1, (2 * batch_size) // num_classes))
    ranked = sorted(eligible, key=lambda i: (-counts[i], i))
    return kappa, sorted(ranked[:kappa])


def _class_rows(features: np.ndarray, labels: np.ndarray, class_id: int) -> np.ndarray:
    return features[labels == class_id]


def precision_matrices(
    state: GrodState,
    classes: Sequence[int],
    eps0: float,
) -> Tuple[np.ndarray, Dict[int, np.ndarray]]:
    state.require_ready()
    assert state.cov_pca is not None
    pca_inv = regularized_inverse(state.cov_pca, eps0)
    class_inv = {i: regularized_inverse(state.cov_lda[i], eps0) for i in classes if i in state.cov_lda}
    return pca_inv, class_inv


def id_reference_distances(
    features: np.ndarray,
    labels: np.ndarray,
    state: GrodState,
    classes: Sequence[int],
    eps0: float = 1e-4,
) -> Tuple[float, Dict[int, float]]:
    """Mean squared Mahalanobis distance of the batch to the global and per-class centers."""
    pca_inv, class_inv = precision_matrices(state, classes, eps0)
    assert state.mu_pca is not None
    dist_pca = float(np.mean(mahalanobis_sq_rows(features, state.mu_pca, pca_inv)))
    dist_lda: Dict[int, float] = {}
    for i in classes:
        rows = _class_rows(features, labels, i)
        if rows.shape[0] == 0 or i not in class_inv:
            continue
        dist_lda[i] = float(np.mean(mahalanobis_sq_rows(rows, state.mu_lda[i], class_inv[i])))
    return dist_pca, dist_lda


def initialize_state(
    features: np.ndarray,
    labels: np.ndarray,
    config: GrodConfig,
    num_classes: int,
    state: Optional[GrodState] = None,
) -> GrodState:
    """Centers, covariances and reference distances taken straight from a (pooled) batch."""
    if features.shape[0] == 0:
        raise EmptyInput("cannot initialize GROD statistics from an empty batch")
    fresh = new_state(config) if state is None else state.copy()
    fresh.mu_pca = features.mean(axis=0)
    fresh.cov_pca = covariance_or_floor(features, config.eps0)
    fresh.mu_lda, fresh.cov_lda, fresh.dist_id_lda = {}, {}, {}
    present = [i for i in range(num_classes) if np.any(labels == i)]
    for i in present:
        rows = _class_rows(features, labels, i)
        fresh.mu_lda[i] = rows.mean(axis=0)
        fresh.cov_lda[i] = covariance_or_floor(rows, config.eps0)
    fresh.dist_id_pca, fresh.dist_id_lda = id_reference_distances(features, labels, fresh, present, config.eps0)
    fresh.warmup_features, fresh.warmup_labels = [], []
    return fresh


def update_centers(
    state: GrodState,
    features: np.ndarray,
    labels: np.ndarray,
    classes: Sequence[int],
    gamma_opt: float,
    eps0: float = 1e-4,
) -> GrodState:
    """EMA step ``x <- (1 - gamma_opt) x + gamma_opt x_batch`` for centers, covariances and reference distances.

    A class seen for the first time takes its batch statistics directly.
    """
    state.require_ready()
    updated = state.copy()
    keep = 1.0 - gamma_opt

    def blend(previous: np.ndarray, current: np.ndarray) -> np.ndarray:
        return keep * previous + gamma_opt * current

    updated.mu_pca = blend(state.mu_pca, features.mean(axis=0))
    updated.cov_pca = blend(state.cov_pca, covariance_or_floor(features, eps0))
    seen = []
    for i in classes:
        rows = _class_rows(features, labels, i)
        if rows.shape[0] == 0:
            continue
        seen.append(i)
        batch_mu, batch_cov = rows.mean(axis=0), covariance_or_floor(rows, eps0)
        if i in state.mu_lda:
            updated.mu_lda[i] = blend(state.mu_lda[i], batch_mu)
            updated.cov_lda[i] = blend(state.cov_lda[i], batch_cov)
        else:
            updated.mu_lda[i], updated.cov_lda[i] = batch_mu, batch_cov

    dist_pca, dist_lda = id_reference_distances(features, labels, updated, seen, eps0)
    updated.dist_id_pca = keep * state.dist_id_pca + gamma_opt * dist_pca
    for i, value in dist_lda.items():
        previous = state.dist_id_lda.get(i)
        updated.dist_id_lda[i] = value if previous is None else keep * previous + gamma_opt * value
    return updated


def mine_all_boundaries(
    features: np.ndarray,
    labels: np.ndarray,
    eligible: Sequence[int],
    classes: Sequence[int],
    config: GrodConfig,
) -> List[BoundarySet]:
    """PCA boundary of the whole batch, then LDA boundaries of every selected class."""
    boundaries: List[BoundarySet] = []
    n, s = features.shape
    if config.sources.uses_pca and n >= 2:
        basis = pca_fit(features, min(config.pca_axes, n - 1, s))
        boundaries.append(mine_boundary(features, basis))
    if config.sources.uses_lda and len(eligible) >= 2 and classes:
        mask = np.isin(labels, eligible)
        bases = lda_fit(features[mask], labels[mask], min(config.lda_axes, len(eligible) - 1), config.eps0)
        by_class = {basis.class_id: basis for basis in bases}
        for i in classes:
            if i in by_class:
                boundaries.append(mine_boundary(_class_rows(features, labels, i), by_class[i]))
    return boundaries


def build_ood_centers(boundaries: Sequence[BoundarySet], state: GrodState, a: float, eps: float) -> OodCenters:
    """``u = v + a (v - mu) / (||v - mu|| + eps)`` for every boundary point ``v``."""
    state.require_ready()
    points: List[np.ndarray] = []
    provenance: List[Provenance] = []
    for boundary in boundaries:
        if boundary.source.kind is ProjectionKind.PCA:
            center = state.mu_pca
        else:
            center = state.mu_lda[int(boundary.source.class_id)]
        offsets = boundary.points - center
        norms = np.linalg.norm(offsets, axis=1, keepdims=True)
        points.append(boundary.points + a * offsets / (norms + eps))
        provenance.extend([boundary.source] * len(boundary))
    if not points:
        raise EmptyInput("no boundary points to extend")
    return OodCenters(points=np.concatenate(points, axis=0), provenance=provenance)


def feature_scale(state: GrodState, eps: float = 1e-7) -> float:
    """Root-mean-square spread of the tracked features, ``sqrt(tr(cov) / s)``."""
    state.require_ready()
    assert state.cov_pca is not None
    return max(float(np.sqrt(np.trace(state.cov_pca) / state.cov_pca.shape[0])), eps)


def sample_fake_ood(
    centers: OodCenters,
    a: float,
    num: int,
    seed: SeedLike,
    scale: float = 1.0,
) -> Tuple[np.ndarray, List[Provenance]]:
    """``num`` draws per provenance group, round-robin over its centers, each ``N(center, scale^2 (a/3) I)``."""
    if len(centers) == 0:
        raise EmptyInput("no OOD centers to sample around")
    rng = make_rng(seed)
    std = scale * np.sqrt(a / 3.0)
    groups: Dict[Provenance, List[int]] = {}
    for index, source in enumerate(centers.provenance):
        groups.setdefault(source, []).append(index)
    samples: List[np.ndarray] = []
    provenance: List[Provenance] = []
    for source, members in groups.items():
        picks = np.asarray([members[k % len(members)] for k in range(num)], dtype=np.int64)
        noise = rng.standard_normal((num, centers.points.shape[1]))
        samples.append(centers.points[picks] + std * noise)
        provenance.extend([source] * num)
    return np.concatenate(samples, axis=0), provenance


def ood_distances(
    points: np.ndarray,
    state: GrodState,
    classes: Sequence[int],
    eps0: float = 1e-4,
) -> Tuple[np.ndarray, List[Optional[int]]]:
    """Distance to the global center when no class is selected, else the min over every tracked class.

    ``classes`` only switches between the two regimes; a candidate that lands on
    an unselected class is still measured against that class.
    """
    points = np.atleast_2d(points)
    pca_inv, class_inv = precision_matrices(state, state.known_classes() if len(classes) else [], eps0)
    tracked = sorted(class_inv)
    if not tracked:
        assert state.mu_pca is not None
        return mahalanobis_sq_rows(points, state.mu_pca, pca_inv), [None] * points.shape[0]
    table = np.stack([mahalanobis_sq_rows(points, state.mu_lda[i], class_inv[i]) for i in tracked], axis=1)
    nearest = np.argmin(table, axis=1)
    return table[np.arange(points.shape[0]), nearest], [tracked[j] for j in nearest]


def ood_distance(
    point: np.ndarray,
    state: GrodState,
    classes: Sequence[int],
    eps0: float = 1e-4,
) -> Tuple[float, Optional[int]]:
    distances, nearest = ood_distances(np.asarray(point)[None, :], state, classes, eps0)
    return float(distances[0]), nearest[0]


def reference_distances(state: GrodState, nearest: Sequence[Optional[int]], eps: float) -> np.ndarray:
    """Per-point ID reference distance (global or nearest class), floored at ``eps``."""
    values = [state.dist_id_pca if i is None else state.dist_id_lda[i] for i in nearest]
    return np.maximum(np.asarray(values, dtype=np.float64), eps)


def filter_margin(ratios: np.ndarray, lambda_filter: float) -> float:
    """``lambda * (10 / N) * sum(ratio - 1)``, never negative."""
    raw = lambda_filter * (FILTER_SCALE / ratios.size) * float(np.sum(ratios - 1.0))
    return max(0.0, raw)


def filter_fake_ood(
    points: np.ndarray,
    provenance: Sequence[Provenance],
    state: GrodState,
    classes: Sequence[int],
    lambda_filter: float,
    batch_size: int,
    num_classes: int,
    seed: SeedLike,
    eps: float = 1e-7,
    eps0: float = 1e-4,
) -> FilterResult:
    """Drop candidates closer than ``(1 + margin)`` times their reference distance, then cap at ``B//K + 2``."""
    points = np.atleast_2d(points)
    if points.shape[0] == 0:
        raise EmptyInput("no fake OOD candidates to filter")
    dist_ood, nearest = ood_distances(points, state, classes, eps0)
    dist_id = reference_distances(state, nearest, eps)
    margin = filter_margin(dist_ood / dist_id, lambda_filter)
    kept = np.flatnonzero(dist_ood >= (1.0 + margin) * dist_id)
    if kept.size == 0:
        raise AllFiltered(f"all {points.shape[0]} fake OOD candidates were filtered out")
    cap = batch_size // num_classes + 2
    if kept.size > cap:
        rng = make_rng(seed)
        kept = np.sort(rng.choice(kept, size=cap, replace=False))
    return FilterResult(
        points=points[kept],
        provenance=[provenance[i] for i in kept],
        nearest_class=[nearest[i] for i in kept],
        dist_ood=dist_ood[kept],
        dist_id=dist_id[kept],
        margin=margin,
        candidates=int(points.shape[0]),
        deleted=int(points.shape[0] - kept.size),
    )


def soft_labels(
    points: np.ndarray,
    state: GrodState,
    num_classes: int,
    eps: float = 1e-7,
    eps0: float = 1e-4,
) -> np.ndarray:
    """Rows ``softmax([ratio_j - 1 for j < K] + [1 - max_j ratio_j])`` with ``ratio_j = DistID_j / Dist(v, class j)``.

    Classes without tracked statistics get ratio 0.
    """
    points = np.atleast_2d(points)
    known = [i for i in state.known_classes() if i < num_classes]
    _, class_inv = precision_matrices(state, known, eps0)
    ratios = np.zeros((points.shape[0], num_classes))
    for i in known:
        distance = np.maximum(mahalanobis_sq_rows(points, state.mu_lda[i], class_inv[i]), eps)
        ratios[:, i] = state.dist_id_lda.get(i, 0.0) / distance
    logits = np.concatenate([ratios - 1.0, 1.0 - ratios.max(axis=1, keepdims=True)], axis=1)
    return softmax(logits, axis=1)


def update_lambda(current: float, ratios: np.ndarray, gamma_opt: float) -> float:
    """EMA toward the lambda at which half of the candidates would survive filtering."""
    if ratios.size == 0:
        return current
    excess = float(np.mean(ratios - 1.0))
    if excess <= 0.0:
        return current
    target = max(0.0, (float(np.median(ratios)) - 1.0) / (FILTER_SCALE * excess))
    return (1.0 - gamma_opt) * current + gamma_opt * target


def _id_only(features: np.ndarray, labels: np.ndarray, num_classes: int, warmup: bool = False) -> AugmentedBatch:
    return AugmentedBatch(
        features=features.copy(),
        labels=one_hot(labels, num_classes + 1),
        num_id=features.shape[0],
        warmup=warmup,
    )


def grod_augment_batch(
    features: np.ndarray,
    labels: np.ndarray,
    state: GrodState,
    config: GrodConfig,
    num_classes: int,
    seed: SeedLike,
) -> Tuple[AugmentedBatch, GrodState]:
    """One batch of the fine-tuning stage: ID rows first, then the retained fake OOD rows.

    Warmup batches only accumulate statistics and come back unchanged.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels).astype(np.int64)
    batch_size = features.shape[0]

    if not state.initialized:
        if config.warmup_batches > 0:
            pooled = state.copy()
            pooled.warmup_features.append(features.copy())
            pooled.warmup_labels.append(labels.copy())
            pooled.batch_index += 1
            if pooled.batch_index >= config.warmup_batches:
                pooled = initialize_state(
                    np.concatenate(pooled.warmup_features), np.concatenate(pooled.warmup_labels), config, num_classes, pooled
                )
                logger.debug("GROD statistics initialized", extra={"batch_index": pooled.batch_index})
            return _id_only(features, labels, num_classes, warmup=True), pooled
        state = initialize_state(features, labels, config, num_classes, state)

    counts = np.bincount(labels[labels < num_classes], minlength=num_classes)
    kappa, classes = select_classes(counts, batch_size, num_classes)
    eligible = [i for i, count in enumerate(counts) if count > 1]
    state = update_centers(state, features, labels, classes, config.gamma_opt, config.eps0)
    state.batch_index += 1

    boundaries = mine_all_boundaries(features, labels, eligible, classes, config)
    if not boundaries:
        return _id_only(features, labels, num_classes), state

    rng = make_rng(seed)
    scale = feature_scale(state, config.eps) if config.relative_extension else 1.0
    centers = build_ood_centers(boundaries, state, config.a * scale, config.eps)
    num = config.samples_per_group(batch_size, kappa)
    candidates, provenance = sample_fake_ood(centers, config.a, num, rng, scale=scale)
    try:
        result = filter_fake_ood(
            candidates,
            provenance,
            state,
            classes,
            state.lambda_filter,
            batch_size,
            num_classes,
            rng,
            config.eps,
            config.eps0,
        )
    except AllFiltered:
        logger.warning(
            "Every fake OOD candidate was filtered; batch proceeds ID-only",
            extra={"batch_index": state.batch_index, "candidates": int(candidates.shape[0])},
        )
        return _id_only(features, labels, num_classes), state

    if config.learn_lambda:
        dist_ood, nearest = ood_distances(candidates, state, classes, config.eps0)
        ratios = dist_ood / reference_distances(state, nearest, config.eps)
        state.lambda_filter = update_lambda(state.lambda_filter, ratios, config.gamma_opt)

    if kappa == 0:
        fake_labels = one_hot(np.full(len(result.provenance), num_classes, dtype=np.int64), num_classes + 1)
    else:
        fake_labels = soft_labels(result.points, state, num_classes, config.eps, config.eps0)
    fake = FakeOodBatch(
        points=result.points,
        soft_labels=fake_labels,
        provenance=result.provenance,
        nearest_class=result.nearest_class,
    )
    logger.debug(
        "GROD batch augmented",
        extra={
            "batch_index": state.batch_index,
            "kappa": kappa,
            "candidates": result.candidates,
            "deleted": result.deleted,
            "retained": len(fake),
            "margin": result.margin,
        },
    )
    return (
        AugmentedBatch(
            features=np.concatenate([features, fake.points], axis=0),
            labels=np.concatenate([one_hot(labels, num_classes + 1), fake.soft_labels], axis=0),
            num_id=batch_size,
            fake=fake,
        ),
        state,
    )


__all__ = [
    "build_ood_centers",
    "feature_scale",
    "filter_fake_ood",
    "filter_margin",
    "grod_augment_batch",
    "id_reference_distances",
    "initialize_state",
    "mine_all_boundaries",
    "new_state",
    "ood_distance",
    "ood_distances",
    "precision_matrices",
    "reference_distances",
    "sample_fake_ood",
    "select_classes",
    "soft_labels",
    "update_centers",
    "update_lambda",
]
