from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from domain.entities.grod import GrodConfig
from domain.entities.model import Budget
from domain.entities.value_objects import OodSources, OptimizerType, ScorerType, TaskType
from domain.errors import ConfigError

# Location keys left out of the hash so reports do not depend on where a run writes.
_UNHASHED = {"data_dir", "out_dir"}


class ExperimentConfig(BaseModel):
    """Every experiment knob as one flat key."""

    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    task: TaskType = TaskType.APPENDIX_C
    seed: int = Field(default=0, ge=0)
    seeds: List[int] = Field(default_factory=list)
    data_dir: str = "data"
    out_dir: str = "output"

    # model
    d_hat: int = Field(default=2, ge=1)
    heads: int = Field(default=2, ge=1)
    m_h: int = Field(default=1, ge=1)
    m_v: int = Field(default=1, ge=1)
    r: int = Field(default=4, ge=1)
    depth: int = Field(default=2, ge=0)

    # training
    epochs: int = Field(default=10, ge=1)
    batch_size: int = Field(default=64, ge=2)
    optimizer: OptimizerType = OptimizerType.ADAMW
    lr: float = Field(default=1e-4, gt=0)
    weight_decay: float = Field(default=5e-2, ge=0)
    validation_fraction: float = Field(default=0.1, ge=0, lt=1)
    dump_fake_ood: bool = False

    # grod
    gamma: float = Field(default=0.1, ge=0, le=1)
    gamma_opt: float = Field(default=0.1, gt=0, le=1)
    a: float = Field(default=0.1, gt=0)
    num: Optional[int] = Field(default=None, ge=1)
    warmup_batches: int = Field(default=5, ge=0)
    lambda_filter: float = Field(default=0.1, ge=0)
    learn_lambda: bool = False
    eps: float = Field(default=1e-7, gt=0)
    eps0: float = Field(default=1e-4, ge=0)
    pca_axes: int = Field(default=8, ge=1)
    lda_axes: int = Field(default=4, ge=1)
    ood_sources: OodSources = OodSources.PCA_LDA
    relative_extension: bool = True

    # scoring
    scorer: ScorerType = ScorerType.VIM
    tpr: float = Field(default=0.95, gt=0, le=1)
    temperature: float = Field(default=1.0, gt=0)
    vim_dim: Optional[int] = Field(default=None, ge=0)
    eval_files: List[str] = Field(default_factory=lambda: ["test.csv"])

    # data generation
    train_per_component: int = Field(default=1000, ge=2)
    test_per_component: int = Field(default=500, ge=1)
    ingest_classes: int = Field(default=4, ge=2)
    ingest_dim: int = Field(default=64, ge=2)
    ingest_train_per_class: int = Field(default=200, ge=2)
    ingest_test_per_class: int = Field(default=100, ge=1)
    ingest_separation: float = Field(default=6.0, ge=0)
    ingest_noise_floor: float = Field(default=0.3, gt=0)

    # capacity sweep: depths at budget (2, 2, 1, 1, 4); widths w at depth 2 with budget (2w, 1, 1, w, 2w)
    sweep_depths: List[int] = Field(default_factory=lambda: [1, 2, 3, 4, 6, 8])
    sweep_widths: List[int] = Field(default_factory=list)

    # ablation grid
    ablation_a: List[float] = Field(default_factory=lambda: [0.01, 0.1, 1.0])
    ablation_gamma: List[float] = Field(default_factory=lambda: [0.0, 0.1, 0.5])

    @model_validator(mode="after")
    def _check_lists(self) -> "ExperimentConfig":
        if any(d < 0 for d in self.sweep_depths) or any(w < 1 for w in self.sweep_widths):
            raise ValueError("sweep_depths must be >= 0 and sweep_widths >= 1")
        if any(not 0.0 <= g <= 1.0 for g in self.ablation_gamma) or any(a <= 0 for a in self.ablation_a):
            raise ValueError("ablation_gamma must lie in [0, 1] and ablation_a must be > 0")
        if not self.eval_files:
            raise ValueError("eval_files must name at least one file")
        return self

    @property
    def run_seeds(self) -> List[int]:
        return list(self.seeds) if self.seeds else [self.seed]

    def budget(self) -> Budget:
        return Budget(d_hat=self.d_hat, heads=self.heads, m_h=self.m_h, m_v=self.m_v, r=self.r)

    def grod(self) -> GrodConfig:
        return GrodConfig(
            a=self.a,
            gamma=self.gamma,
            gamma_opt=self.gamma_opt,
            num=self.num,
            warmup_batches=self.warmup_batches,
            lambda_filter=self.lambda_filter,
            eps=self.eps,
            eps0=self.eps0,
            pca_axes=self.pca_axes,
            lda_axes=self.lda_axes,
            sources=self.ood_sources,
            learn_lambda=self.learn_lambda,
            relative_extension=self.relative_extension,
        )

    def canonical_json(self) -> str:
        payload = {k: v for k, v in self.model_dump(mode="json").items() if k not in _UNHASHED}
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Validated copy with some keys replaced (``None`` values are ignored)."""
        merged = {**self.model_dump(), **{k: v for k, v in overrides.items() if v is not None}}
        return build_experiment_config(merged)


def build_experiment_config(values: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig(**values)
    except ValidationError as exc:
        first = exc.errors()[0]
        key = ".".join(str(part) for part in first.get("loc", ())) or "config"
        raise ConfigError(f"{key}: {first.get('msg', 'invalid value')}") from exc


def load_experiment_config(path: Optional[Path], **overrides: Any) -> ExperimentConfig:
    """Read a flat ``key: value`` YAML file; keyword overrides win over the file."""
    values: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            loaded = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path} must hold flat key: value pairs")
        for key, value in loaded.items():
            if isinstance(value, dict):
                raise ConfigError(f"{key}: nested sections are not supported, use flat keys")
        values.update({str(k): v for k, v in loaded.items()})
    values.update({k: v for k, v in overrides.items() if v is not None})
    return build_experiment_config(values)


__all__ = ["ExperimentConfig", "build_experiment_config", "load_experiment_config"]
