from __future__ import annotations

import numpy as np
import pytest

from application.services.optimizers import (
    AdamWOptimizer,
    AdamWState,
    SgdOptimizer,
    adamw_step,
    build_optimizer,
    sgd_step,
)
from domain.entities.value_objects import OptimizerType
from tests.support.builders import random_model


def _constant_grads(model, value: float):
    return {name: np.full_like(array, value) for name, array in model.parameters().items()}


def test_sgd_step_moves_against_the_gradient():
    model = random_model(seed=0)
    before = {name: array.copy() for name, array in model.parameters().items()}
    sgd_step(model, _constant_grads(model, 2.0), lr=0.1)
    for name, array in model.parameters().items():
        np.testing.assert_allclose(array, before[name] - 0.2)


def test_sgd_weight_decay_shrinks_parameters():
    model = random_model(seed=0)
    before = model.parameters()["head.w3"].copy()
    sgd_step(model, _constant_grads(model, 0.0), lr=0.1, weight_decay=0.5)
    np.testing.assert_allclose(model.parameters()["head.w3"], 0.95 * before)


def test_sgd_skips_parameters_without_gradients():
    model = random_model(seed=0)
    before = model.parameters()["input.weight"].copy()
    sgd_step(model, {"head.b4": np.ones(3)}, lr=0.1)
    np.testing.assert_array_equal(model.parameters()["input.weight"], before)


def test_adamw_first_step_has_magnitude_lr():
    model = random_model(seed=1)
    before = {name: array.copy() for name, array in model.parameters().items()}
    state = AdamWState()
    adamw_step(model, _constant_grads(model, -3.0), state, lr=0.01, weight_decay=0.0)
    assert state.step == 1
    for name, array in model.parameters().items():
        np.testing.assert_allclose(array - before[name], 0.01, rtol=1e-6)


def test_adamw_decay_is_decoupled_from_the_gradient():
    model = random_model(seed=2)
    before = model.parameters()["head.w4"].copy()
    adamw_step(model, _constant_grads(model, 0.0), AdamWState(), lr=0.1, weight_decay=0.5)
    np.testing.assert_allclose(model.parameters()["head.w4"], 0.95 * before)


def test_build_optimizer_picks_the_configured_kind():
    sgd = build_optimizer(OptimizerType.SGD, 0.5, 0.0)
    adamw = build_optimizer(OptimizerType.ADAMW, 1e-3, 1e-2)
    assert isinstance(sgd, SgdOptimizer) and sgd.lr == 0.5
    assert isinstance(adamw, AdamWOptimizer) and adamw.weight_decay == pytest.approx(1e-2)


def test_adamw_optimizer_keeps_state_between_steps():
    model = random_model(seed=3)
    optimizer = AdamWOptimizer(lr=1e-3, weight_decay=0.0)
    optimizer.step(model, _constant_grads(model, 1.0))
    optimizer.step(model, _constant_grads(model, 1.0))
    assert optimizer.state.step == 2
    assert set(optimizer.state.first_moment) == set(model.parameters())
