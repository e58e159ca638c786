"""Glue between feature rows and the transformer: inputs, initialization, feature extraction."""

from __future__ import annotations

from typing import Tuple

import numpy as np

from domain.entities.model import Budget, TransformerModel

from .seeding import SeedLike
from .transformer import flatten_hidden, forward, init_model


def model_inputs(features: np.ndarray) -> np.ndarray:
    """Feature rows ``(n, s)`` as single-token inputs ``(n, s, 1)``."""
    return np.asarray(features, dtype=np.float64)[:, :, None]


def build_model(
    dim: int,
    num_classes: int,
    budget: Budget,
    depth: int,
    seed: SeedLike,
    head_only: bool = False,
) -> TransformerModel:
    """Fresh model; ``head_only`` pins an identity input map with no blocks so features pass straight to the head."""
    if head_only:
        width = Budget(d_hat=dim, heads=1, m_h=1, m_v=1, r=1)
        model = init_model(dim, 1, width, 0, num_classes, seed)
        model.input_weight[...] = np.eye(dim)
        model.input_bias[...] = 0.0
        return model
    return init_model(dim, 1, budget, depth, num_classes, seed)


def extract(model: TransformerModel, features: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Flattened hidden states and raw ``K+1`` logits for feature rows."""
    hidden, logits = forward(model, model_inputs(features))
    return flatten_hidden(hidden), logits


__all__ = ["model_inputs", "build_model", "extract"]
