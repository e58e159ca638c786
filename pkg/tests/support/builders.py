from __future__ import annotations

from pathlib import Path
from typing import Any, Dict

import numpy as np
import yaml

from application.services.synthdata import gen_feature_set
from application.services.transformer import init_model
from config.experiment import ExperimentConfig, build_experiment_config
from domain.entities.features import FeatureBatch
from domain.entities.model import Budget, TransformerModel

SMALL_BUDGET = Budget(d_hat=3, heads=2, m_h=2, m_v=2, r=4)

# Seconds-scale experiment: few rows, one or two epochs, small sweep and ablation grids.
TINY_VALUES: Dict[str, Any] = {
    "epochs": 2,
    "batch_size": 32,
    "lr": 1e-2,
    "warmup_batches": 1,
    "train_per_component": 60,
    "test_per_component": 30,
    "ingest_classes": 3,
    "ingest_dim": 8,
    "ingest_train_per_class": 40,
    "ingest_test_per_class": 20,
    "sweep_depths": [1, 2],
    "ablation_a": [0.1],
    "ablation_gamma": [0.1],
    "vim_dim": 1,
}


def tiny_config(tmp_path: Path | None = None, **overrides: Any) -> ExperimentConfig:
    values = dict(TINY_VALUES)
    if tmp_path is not None:
        values["data_dir"] = str(tmp_path / "data")
        values["out_dir"] = str(tmp_path / "out")
    values.update(overrides)
    return build_experiment_config(values)


def write_config(path: Path, **overrides: Any) -> Path:
    """Flat YAML experiment file holding the tiny values plus ``overrides``."""
    path.write_text(yaml.safe_dump({**TINY_VALUES, **overrides}, sort_keys=True), encoding="utf-8")
    return path


def random_model(
    seed: int,
    d_hat0: int = 2,
    tau: int = 1,
    depth: int = 2,
    num_classes: int = 2,
    budget: Budget = SMALL_BUDGET,
) -> TransformerModel:
    """Model whose biases are random too, so gradients reach every tensor."""
    model = init_model(d_hat0, tau, budget, depth, num_classes, seed)
    rng = np.random.default_rng(seed + 1)
    for array in model.parameters().values():
        array[...] = rng.uniform(-0.5, 0.5, size=array.shape)
    return model


def blobs(num_classes: int = 3, dim: int = 4, n_per_class: int = 20, separation: float = 6.0, seed: int = 0) -> FeatureBatch:
    return gen_feature_set(num_classes, dim, n_per_class, separation, seed)
