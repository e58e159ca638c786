from __future__ import annotations

import numpy as np
import pytest

from application.services.grod_engine import (
    build_ood_centers,
    feature_scale,
    filter_fake_ood,
    filter_margin,
    grod_augment_batch,
    id_reference_distances,
    initialize_state,
    mine_all_boundaries,
    new_state,
    ood_distance,
    ood_distances,
    sample_fake_ood,
    select_classes,
    soft_labels,
    update_centers,
    update_lambda,
)
from application.services.numerics import mahalanobis_sq, regularized_inverse
from domain.entities.grod import GrodConfig, GrodState, OodCenters
from domain.entities.value_objects import OodSources, ProjectionKind, Provenance
from domain.errors import AllFiltered, UninitializedState
from tests.support.builders import blobs


def _batch(seed: int, num_classes: int = 3, dim: int = 4, n_per_class: int = 10):
    batch = blobs(num_classes, dim, n_per_class, separation=4.0, seed=seed)
    return batch.features, batch.labels.astype(np.int64)


def test_select_classes_uses_the_largest_eligible_classes():
    kappa, classes = select_classes([5, 1, 7, 3], batch_size=16, num_classes=4)
    assert kappa == 3
    assert classes == [0, 2, 3]
    kappa, classes = select_classes([5, 1, 7, 3], batch_size=1, num_classes=4)
    assert (kappa, classes) == (1, [2])
    assert select_classes([1, 0], batch_size=4, num_classes=2) == (0, [])


def test_initialize_state_takes_batch_statistics():
    features, labels = _batch(0)
    state = initialize_state(features, labels, GrodConfig(), 3)
    np.testing.assert_allclose(state.mu_pca, features.mean(axis=0))
    np.testing.assert_allclose(state.mu_lda[1], features[labels == 1].mean(axis=0))
    assert state.known_classes() == [0, 1, 2]
    assert state.dist_id_pca > 0
    assert set(state.dist_id_lda) == {0, 1, 2}


def test_update_centers_blends_with_gamma_opt_and_does_not_mutate_input():
    features, labels = _batch(1)
    state = initialize_state(features, labels, GrodConfig(), 3)
    shifted = features + 1.0
    updated = update_centers(state, shifted, labels, [0, 1, 2], gamma_opt=0.25)
    np.testing.assert_allclose(updated.mu_pca, state.mu_pca + 0.25)
    np.testing.assert_allclose(state.mu_pca, features.mean(axis=0))
    with pytest.raises(UninitializedState):
        update_centers(new_state(GrodConfig()), features, labels, [0], 0.1)


def test_ood_centers_lie_within_a_of_their_boundary_points():
    features, labels = _batch(2)
    config = GrodConfig(a=0.5)
    state = initialize_state(features, labels, config, 3)
    boundaries = mine_all_boundaries(features, labels, [0, 1, 2], [0, 1, 2], config)
    centers = build_ood_centers(boundaries, state, config.a, config.eps)
    origins = np.vstack([b.points for b in boundaries])
    distances = np.linalg.norm(centers.points - origins, axis=1)
    assert np.all(distances <= config.a)
    kinds = {p.kind for p in centers.provenance}
    assert kinds == {ProjectionKind.PCA, ProjectionKind.LDA}


def test_mine_all_boundaries_respects_sources():
    features, labels = _batch(3)
    pca_only = mine_all_boundaries(features, labels, [0, 1, 2], [0, 1, 2], GrodConfig(sources=OodSources.PCA))
    assert [b.source for b in pca_only] == [Provenance.pca()]
    lda_only = mine_all_boundaries(features, labels, [0, 1, 2], [0, 2], GrodConfig(sources=OodSources.LDA))
    assert [b.source for b in lda_only] == [Provenance.lda(0), Provenance.lda(2)]
    assert mine_all_boundaries(features, labels, [0, 1, 2], [0, 1], GrodConfig(sources=OodSources.NONE)) == []


def test_sample_fake_ood_draws_num_per_group():
    features, labels = _batch(4)
    config = GrodConfig()
    state = initialize_state(features, labels, config, 3)
    boundaries = mine_all_boundaries(features, labels, [0, 1, 2], [0, 1, 2], config)
    centers = build_ood_centers(boundaries, state, config.a, config.eps)
    points, provenance = sample_fake_ood(centers, config.a, 6, seed=9)
    groups = set(centers.provenance)
    assert points.shape == (6 * len(groups), 4)
    for group in groups:
        assert provenance.count(group) == 6
    again, _ = sample_fake_ood(centers, config.a, 6, seed=9)
    np.testing.assert_array_equal(points, again)


def test_filter_invariants_on_random_batches():
    checked = 0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        num_classes = int(rng.integers(2, 5))
        features, labels = _batch(seed, num_classes=num_classes, dim=int(rng.integers(2, 6)))
        config = GrodConfig(a=float(rng.uniform(0.5, 2.0)), lambda_filter=float(rng.uniform(0.0, 0.3)))
        state = initialize_state(features, labels, config, num_classes)
        classes = list(range(num_classes))
        boundaries = mine_all_boundaries(features, labels, classes, classes, config)
        centers = build_ood_centers(boundaries, state, config.a, config.eps)
        for origin, center in zip(np.vstack([b.points for b in boundaries]), centers.points):
            assert np.linalg.norm(center - origin) <= config.a
        candidates, provenance = sample_fake_ood(centers, config.a, 16, seed)
        try:
            result = filter_fake_ood(
                candidates, provenance, state, classes, config.lambda_filter, features.shape[0], num_classes, seed
            )
        except AllFiltered:
            continue
        checked += 1
        assert len(result.provenance) <= features.shape[0] // num_classes + 2
        assert result.margin >= 0.0
        for point, nearest, reference in zip(result.points, result.nearest_class, result.dist_id):
            inverse = regularized_inverse(state.cov_lda[nearest], config.eps0)
            distance = mahalanobis_sq(point, state.mu_lda[nearest], inverse)
            assert distance >= (1.0 + result.margin) * reference * (1 - 1e-12)
        labels_out = soft_labels(result.points, state, num_classes, config.eps, config.eps0)
        assert labels_out.shape == (len(result.provenance), num_classes + 1)
        np.testing.assert_allclose(labels_out.sum(axis=1), 1.0, atol=1e-8)
    assert checked > 0


def test_filter_raises_when_everything_is_deleted():
    features, labels = _batch(5)
    config = GrodConfig()
    state = initialize_state(features, labels, config, 3)
    centers = np.repeat(state.mu_lda[0][None], 4, axis=0)
    with pytest.raises(AllFiltered):
        filter_fake_ood(centers, [Provenance.pca()] * 4, state, [0, 1, 2], 0.1, 30, 3, seed=0)


def test_filter_margin_is_clamped_at_zero():
    assert filter_margin(np.array([0.5, 0.5]), 0.1) == 0.0
    assert filter_margin(np.array([2.0, 3.0]), 0.1) == pytest.approx(0.1 * 10 / 2 * 3.0)


def test_soft_labels_favour_the_ood_slot_far_from_every_class():
    features, labels = _batch(6)
    state = initialize_state(features, labels, GrodConfig(), 3)
    far = soft_labels(np.full((1, 4), 100.0), state, 3)
    assert np.argmax(far[0]) == 3
    near = soft_labels(state.mu_lda[1][None], state, 3)
    assert np.argmax(near[0]) == 1


def test_update_lambda_moves_toward_target_and_ignores_empty_input():
    assert update_lambda(0.1, np.array([]), 0.5) == 0.1
    assert update_lambda(0.1, np.array([0.5, 0.8]), 0.5) == 0.1
    moved = update_lambda(0.1, np.array([2.0, 3.0, 4.0]), 0.5)
    target = (3.0 - 1.0) / (10.0 * 2.0)
    assert moved == pytest.approx(0.5 * 0.1 + 0.5 * target)


def test_warmup_pools_batches_then_initializes():
    config = GrodConfig(warmup_batches=2)
    state = new_state(config)
    first, state = grod_augment_batch(*_batch(7), state, config, 3, seed=1)
    assert first.warmup and first.num_fake == 0 and not state.initialized
    np.testing.assert_allclose(first.labels.sum(axis=1), 1.0)
    second, state = grod_augment_batch(*_batch(8), state, config, 3, seed=2)
    assert second.warmup and state.initialized
    assert state.warmup_features == []
    third, state = grod_augment_batch(*_batch(9), state, config, 3, seed=3)
    assert not third.warmup
    assert third.features.shape[0] == third.num_id + third.num_fake
    assert state.batch_index == 3


def test_augmented_batch_keeps_id_rows_first_and_labels_normalized():
    features, labels = _batch(10)
    config = GrodConfig(warmup_batches=0, a=1.0)
    augmented, state = grod_augment_batch(features, labels, new_state(config), config, 3, seed=4)
    np.testing.assert_array_equal(augmented.features[: augmented.num_id], features)
    np.testing.assert_allclose(augmented.labels.sum(axis=1), 1.0, atol=1e-8)
    assert augmented.num_fake <= 30 // 3 + 2
    assert state.initialized


def test_sources_none_yields_plain_id_batches():
    features, labels = _batch(11)
    config = GrodConfig(warmup_batches=0, sources=OodSources.NONE)
    augmented, _ = grod_augment_batch(features, labels, new_state(config), config, 3, seed=0)
    assert augmented.num_fake == 0
    assert augmented.features.shape == features.shape


def _three_class_state() -> GrodState:
    means = {0: np.array([0.0, 0.0]), 1: np.array([10.0, 0.0]), 2: np.array([0.0, 10.0])}
    return GrodState(
        mu_pca=np.mean(list(means.values()), axis=0),
        cov_pca=25.0 * np.eye(2),
        dist_id_pca=2.0,
        mu_lda=means,
        cov_lda={i: np.eye(2) for i in means},
        dist_id_lda={i: 2.0 for i in means},
    )


def test_ood_distance_measures_unselected_classes_too():
    state = _three_class_state()
    distance, nearest = ood_distance(state.mu_lda[2], state, [0])
    assert distance == pytest.approx(0.0)
    assert nearest == 2
    far, nearest_far = ood_distance(np.array([-20.0, -20.0]), state, [0])
    assert nearest_far == 0 and far > 2.0


def test_filter_deletes_candidates_sitting_on_an_unselected_class():
    state = _three_class_state()
    candidates = np.vstack([state.mu_lda[2], [-20.0, -20.0]])
    provenance = [Provenance.lda(0)] * 2
    result = filter_fake_ood(candidates, provenance, state, [0], 0.1, 30, 3, seed=0)
    assert result.deleted == 1
    np.testing.assert_allclose(result.points, [[-20.0, -20.0]])
    assert result.nearest_class == [0]
    with pytest.raises(AllFiltered):
        filter_fake_ood(candidates[:1], provenance[:1], state, [0], 0.1, 30, 3, seed=0)


def test_ood_distances_match_a_brute_force_minimum_over_all_classes():
    features, labels = _batch(12, num_classes=4, dim=3, n_per_class=15)
    config = GrodConfig()
    state = initialize_state(features, labels, config, 4)
    points = np.random.default_rng(12).normal(scale=4.0, size=(40, 3))
    for classes in ([1], [0, 3], [0, 1, 2, 3]):
        distances, nearest = ood_distances(points, state, classes, config.eps0)
        for point, distance, chosen in zip(points, distances, nearest):
            table = {
                i: mahalanobis_sq(point, state.mu_lda[i], regularized_inverse(state.cov_lda[i], config.eps0))
                for i in range(4)
            }
            assert distance == pytest.approx(min(table.values()))
            assert chosen == min(table, key=table.get)
    global_only, nearest = ood_distances(points, state, [], config.eps0)
    assert nearest == [None] * 40
    inverse = regularized_inverse(state.cov_pca, config.eps0)
    np.testing.assert_allclose(global_only, [mahalanobis_sq(p, state.mu_pca, inverse) for p in points])


def test_id_reference_distances_average_the_feature_dimension():
    rng = np.random.default_rng(13)
    dim, n = 5, 2000
    features = rng.standard_normal((n, dim))
    labels = np.zeros(n, dtype=np.int64)
    state = initialize_state(features, labels, GrodConfig(eps0=0.0), 1)
    dist_pca, dist_lda = id_reference_distances(features, labels, state, [0], eps0=0.0)
    assert dist_pca == pytest.approx((n - 1) / n * dim, rel=1e-9)
    assert dist_lda[0] == pytest.approx(dim, rel=0.01)


def test_fake_ood_noise_has_per_coordinate_variance_a_over_three():
    centers = OodCenters(points=np.zeros((1, 3)), provenance=[Provenance.pca()])
    points, _ = sample_fake_ood(centers, 0.3, 20000, seed=14)
    np.testing.assert_allclose(points.var(axis=0), 0.1, atol=0.005)
    np.testing.assert_allclose(points.mean(axis=0), 0.0, atol=0.01)
    scaled, _ = sample_fake_ood(centers, 0.3, 20000, seed=14, scale=2.0)
    np.testing.assert_allclose(scaled, 2.0 * points)


def test_grod_augment_batch_is_deterministic_for_a_fixed_seed():
    features, labels = _batch(15)
    config = GrodConfig(warmup_batches=0, a=1.0)
    first, first_state = grod_augment_batch(features, labels, new_state(config), config, 3, seed=21)
    second, second_state = grod_augment_batch(features, labels, new_state(config), config, 3, seed=21)
    np.testing.assert_array_equal(first.features, second.features)
    np.testing.assert_array_equal(first.labels, second.labels)
    np.testing.assert_array_equal(first_state.mu_pca, second_state.mu_pca)


def test_feature_scale_is_the_rms_spread():
    state = GrodState(mu_pca=np.zeros(4), cov_pca=np.diag([1.0, 4.0, 4.0, 7.0]))
    assert feature_scale(state) == pytest.approx(2.0)


def test_fake_outliers_follow_the_scale_of_the_features():
    features, labels = _batch(16, dim=4, n_per_class=12)
    config = GrodConfig(warmup_batches=0, a=1.0, eps=1e-12, eps0=0.0)
    big, _ = grod_augment_batch(features, labels, new_state(config), config, 3, seed=5)
    small, _ = grod_augment_batch(1e-3 * features, labels, new_state(config), config, 3, seed=5)
    assert big.num_fake > 0
    assert small.num_fake == big.num_fake
    np.testing.assert_allclose(small.fake.points, 1e-3 * big.fake.points, rtol=1e-6, atol=1e-12)
    np.testing.assert_allclose(small.fake.soft_labels, big.fake.soft_labels, atol=1e-8)


def test_soft_label_argmax_is_the_nearest_class_inside_its_radius():
    state = _three_class_state()
    rng = np.random.default_rng(17)
    for _ in range(30):
        owner = int(rng.integers(0, 3))
        direction = rng.standard_normal(2)
        point = state.mu_lda[owner] + rng.uniform(0.2, 1.2) * direction / np.linalg.norm(direction)
        labels_out = soft_labels(point[None], state, 3)
        _, nearest = ood_distance(point, state, [0, 1, 2])
        assert np.argmax(labels_out[0]) == nearest == owner
