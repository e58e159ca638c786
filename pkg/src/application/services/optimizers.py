"""In-place parameter updates over ``TransformerModel.parameters()``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Protocol

import numpy as np

from domain.entities.model import Gradients, TransformerModel
from domain.entities.value_objects import OptimizerType


def sgd_step(model: TransformerModel, grads: Gradients, lr: float, weight_decay: float = 0.0) -> TransformerModel:
    for name, param in model.parameters().items():
        grad = grads.get(name)
        if grad is None:
            continue
        if weight_decay:
            param -= lr * weight_decay * param
        param -= lr * grad
    return model


@dataclass
class AdamWState:
    step: int = 0
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)


def adamw_step(
    model: TransformerModel,
    grads: Gradients,
    state: AdamWState,
    lr: float,
    weight_decay: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> TransformerModel:
    """Decoupled weight decay followed by the bias-corrected Adam update."""
    state.step += 1
    correction1 = 1.0 - beta1**state.step
    correction2 = 1.0 - beta2**state.step
    for name, param in model.parameters().items():
        grad = grads.get(name)
        if grad is None:
            continue
        m = state.first_moment.setdefault(name, np.zeros_like(param))
        v = state.second_moment.setdefault(name, np.zeros_like(param))
        m *= beta1
        m += (1.0 - beta1) * grad
        v *= beta2
        v += (1.0 - beta2) * grad * grad
        param *= 1.0 - lr * weight_decay
        param -= lr * (m / correction1) / (np.sqrt(v / correction2) + eps)
    return model


class Optimizer(Protocol):
    def step(self, model: TransformerModel, grads: Gradients) -> TransformerModel:
        ...


@dataclass
class SgdOptimizer:
    lr: float
    weight_decay: float = 0.0

    def step(self, model: TransformerModel, grads: Gradients) -> TransformerModel:
        return sgd_step(model, grads, self.lr, self.weight_decay)


@dataclass
class AdamWOptimizer:
    lr: float = 1e-4
    weight_decay: float = 5e-2
    state: AdamWState = field(default_factory=AdamWState)

    def step(self, model: TransformerModel, grads: Gradients) -> TransformerModel:
        return adamw_step(model, grads, self.state, self.lr, self.weight_decay)


def build_optimizer(kind: OptimizerType, lr: float, weight_decay: float) -> Optimizer:
    if kind is OptimizerType.SGD:
        return SgdOptimizer(lr=lr, weight_decay=weight_decay)
    return AdamWOptimizer(lr=lr, weight_decay=weight_decay)


__all__ = [
    "AdamWState",
    "AdamWOptimizer",
    "Optimizer",
    "SgdOptimizer",
    "adamw_step",
    "build_optimizer",
    "sgd_step",
]
