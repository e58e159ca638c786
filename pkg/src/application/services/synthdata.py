"""Synthetic Gaussian-mixture datasets.

The two-class planar mixture draws its component parameters from half-normal
variates and keeps only samples within three standard deviations (the largest
per-axis std) of their component mean. ``gen_feature_set`` builds separated
isotropic clusters in any dimension; ``gen_ingest_sets`` adds a held-out
cluster and an optional lower noise floor off the class span.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from domain.entities.features import FeatureBatch
from domain.errors import EmptyInput

from .seeding import SeedLike, make_rng

logger = logging.getLogger("grodlab.synthdata")

FILTER_SIGMAS = 3.0
DEFAULT_TRAIN_PER_COMPONENT = 1000
DEFAULT_TEST_PER_COMPONENT = 500
APPENDIX_C_CLASSES = 2
_MAX_REJECTION_ROUNDS = 10_000


@dataclass(frozen=True)
class GaussianSpec:
    """Axis-aligned Gaussian component; ``cov`` is diagonal."""

    mean: np.ndarray
    cov: np.ndarray
    count: int

    def __post_init__(self) -> None:
        cov = np.asarray(self.cov, dtype=np.float64)
        if cov.shape != (self.mean.shape[0], self.mean.shape[0]):
            raise ValueError(f"cov shape {cov.shape} does not match mean of length {self.mean.shape[0]}")
        if np.any(cov - np.diag(np.diag(cov))):
            raise ValueError("cov must be diagonal")
        if np.any(np.diag(cov) <= 0):
            raise ValueError("cov diagonal entries must be > 0")
        if self.count < 0:
            raise ValueError("count must be >= 0")

    @property
    def stds(self) -> np.ndarray:
        return np.sqrt(np.diag(self.cov))

    @property
    def filter_radius(self) -> float:
        return FILTER_SIGMAS * float(self.stds.max())


def sample_component(spec: GaussianSpec, rng: np.random.Generator, count: int | None = None) -> np.ndarray:
    """Rejection sampling until ``count`` draws fall inside the 3-sigma ball."""
    wanted = spec.count if count is None else int(count)
    accepted: List[np.ndarray] = []
    total = 0
    for _ in range(_MAX_REJECTION_ROUNDS):
        if total >= wanted:
            break
        draws = rng.normal(size=(max(wanted - total, 16), spec.mean.shape[0])) * spec.stds + spec.mean
        keep = draws[np.linalg.norm(draws - spec.mean, axis=1) <= spec.filter_radius]
        accepted.append(keep)
        total += keep.shape[0]
    if not accepted:
        return np.zeros((0, spec.mean.shape[0]))
    return np.concatenate(accepted, axis=0)[:wanted]


def appendix_c_components(rng: np.random.Generator, count: int) -> List[GaussianSpec]:
    """Two ID components (``i = 1, 2``) followed by the OOD component."""
    components: List[GaussianSpec] = []
    for i in range(1, APPENDIX_C_CLASSES + 1):
        scale = i / 10.0
        mean = scale * np.abs(rng.standard_normal(2))
        stds = scale * np.abs(rng.standard_normal(2)) + 0.1
        components.append(GaussianSpec(mean=mean, cov=np.diag(stds**2), count=count))
    mean = 0.5 * -np.abs(rng.standard_normal(2))
    stds = 0.2 * np.abs(rng.standard_normal(2)) + 0.1
    components.append(GaussianSpec(mean=mean, cov=np.diag(stds**2), count=count))
    return components


@dataclass
class MixtureData:
    """Per-class ID train/test sets and a held-out OOD set (label ``K``)."""

    id_train: List[FeatureBatch]
    id_test: List[FeatureBatch]
    ood_test: FeatureBatch
    components: List[GaussianSpec] = field(default_factory=list)

    @property
    def num_classes(self) -> int:
        return len(self.id_train)

    def train_batch(self) -> FeatureBatch:
        return FeatureBatch.concat(self.id_train, self.num_classes)

    def test_batch(self) -> FeatureBatch:
        return FeatureBatch.concat([*self.id_test, self.ood_test], self.num_classes)


def gen_appendix_c(
    seed: SeedLike,
    train_per_component: int = DEFAULT_TRAIN_PER_COMPONENT,
    test_per_component: int = DEFAULT_TEST_PER_COMPONENT,
) -> MixtureData:
    rng = make_rng(seed)
    components = appendix_c_components(rng, train_per_component)
    k = APPENDIX_C_CLASSES
    id_train, id_test = [], []
    for label, spec in enumerate(components[:k]):
        train = sample_component(spec, rng, train_per_component)
        test = sample_component(spec, rng, test_per_component)
        id_train.append(FeatureBatch(train, np.full(train.shape[0], label, dtype=np.int64), k))
        id_test.append(FeatureBatch(test, np.full(test.shape[0], label, dtype=np.int64), k))
    ood = sample_component(components[k], rng, test_per_component)
    logger.debug(
        "Generated planar mixture",
        extra={"train_per_component": train_per_component, "test_per_component": test_per_component},
    )
    return MixtureData(
        id_train=id_train,
        id_test=id_test,
        ood_test=FeatureBatch(ood, np.full(ood.shape[0], k, dtype=np.int64), k),
        components=components,
    )


def cluster_centers(num_clusters: int, dim: int, separation: float, rng: np.random.Generator) -> np.ndarray:
    """Centers whose minimum pairwise distance equals ``separation``."""
    if num_clusters <= dim:
        return (separation / np.sqrt(2.0)) * np.eye(num_clusters, dim)
    directions = rng.standard_normal((num_clusters, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    closest = min(
        float(np.linalg.norm(directions[i] - directions[j]))
        for i, j in itertools.combinations(range(num_clusters), 2)
    )
    if closest == 0.0:
        raise EmptyInput("random cluster directions coincide")
    return directions * (separation / closest)


def gen_feature_set(
    num_classes: int,
    dim: int,
    n_per_class: int,
    separation: float,
    seed: SeedLike,
) -> FeatureBatch:
    """``num_classes`` unit-variance isotropic clusters, labels ``0..K-1`` in blocks."""
    if num_classes < 2 or dim < 2:
        raise ValueError("gen_feature_set needs at least 2 classes and 2 dimensions")
    rng = make_rng(seed)
    centers = cluster_centers(num_classes, dim, separation, rng)
    return _sample_clusters(centers, n_per_class, rng, num_classes)


def _sample_clusters(
    centers: np.ndarray,
    n_per_class: int,
    rng: np.random.Generator,
    num_classes: int,
    first_label: int = 0,
    stds: np.ndarray | None = None,
) -> FeatureBatch:
    dim = centers.shape[1]
    scale = np.ones(dim) if stds is None else stds
    features = np.concatenate(
        [center + scale * rng.standard_normal((n_per_class, dim)) for center in centers], axis=0
    )
    labels = np.repeat(np.arange(first_label, first_label + centers.shape[0]), n_per_class).astype(np.int64)
    return FeatureBatch(features, labels, num_classes)


def gen_ingest_sets(
    num_classes: int,
    dim: int,
    n_train: int,
    n_test: int,
    separation: float,
    seed: SeedLike,
    noise_floor: float = 1.0,
) -> MixtureData:
    """``num_classes`` ID clusters plus one extra cluster held out as OOD.

    Noise has unit std on the first ``num_classes`` coordinates, where the ID
    centers live when ``num_classes < dim``, and ``noise_floor`` on the rest,
    so features concentrate near a low-dimensional class span the way
    backbone embeddings do. The held-out center sits off that span.
    """
    if num_classes < 2 or dim < 2:
        raise ValueError("gen_ingest_sets needs at least 2 classes and 2 dimensions")
    if noise_floor <= 0:
        raise ValueError("noise_floor must be > 0")
    rng = make_rng(seed)
    centers = cluster_centers(num_classes + 1, dim, separation, rng)
    stds = np.full(dim, float(noise_floor))
    stds[: min(num_classes, dim)] = 1.0
    id_train, id_test = [], []
    for label in range(num_classes):
        center = centers[label : label + 1]
        id_train.append(_sample_clusters(center, n_train, rng, num_classes, label, stds))
        id_test.append(_sample_clusters(center, n_test, rng, num_classes, label, stds))
    ood = _sample_clusters(centers[num_classes:], n_test, rng, num_classes, num_classes, stds)
    return MixtureData(id_train=id_train, id_test=id_test, ood_test=ood)


__all__ = [
    "GaussianSpec",
    "MixtureData",
    "appendix_c_components",
    "cluster_centers",
    "gen_appendix_c",
    "gen_feature_set",
    "gen_ingest_sets",
    "sample_component",
]
