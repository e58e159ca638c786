from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterator, List, Tuple

import numpy as np


@dataclass(frozen=True)
class Budget:
    """Width of a transformer block: ``m = (d_hat, h, m_h, m_V, r)``."""

    d_hat: int
    heads: int
    m_h: int
    m_v: int
    r: int

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if int(value) < 1:
                raise ValueError(f"budget.{name} must be >= 1, got {value}")

    def as_tuple(self) -> Tuple[int, int, int, int, int]:
        return (self.d_hat, self.heads, self.m_h, self.m_v, self.r)


@dataclass
class BlockParameters:
    """One Att + FF block. Head-stacked attention weights."""

    w_q: np.ndarray  # (h, m_h, d_hat)
    w_k: np.ndarray  # (h, m_h, d_hat)
    w_v: np.ndarray  # (h, m_V, d_hat)
    w_o: np.ndarray  # (h, d_hat, m_V)
    w1: np.ndarray  # (r, d_hat)
    b1: np.ndarray  # (r,)
    w2: np.ndarray  # (d_hat, r)
    b2: np.ndarray  # (d_hat,)

    NAMES = ("w_q", "w_k", "w_v", "w_o", "w1", "b1", "w2", "b2")


@dataclass
class ClassifierHead:
    """``f^k(h) = W4_k (W3_k h + b3_k)^T + b4_k`` stacked over ``k = 0..K``."""

    w3: np.ndarray  # (K+1, d_hat)
    b3: np.ndarray  # (K+1, tau)
    w4: np.ndarray  # (K+1, tau)
    b4: np.ndarray  # (K+1,)

    NAMES = ("w3", "b3", "w4", "b4")


@dataclass
class TransformerModel:
    d_hat0: int
    tau: int
    budget: Budget
    num_classes: int
    input_weight: np.ndarray  # (d_hat, d_hat0)
    input_bias: np.ndarray  # (d_hat,)
    blocks: List[BlockParameters] = field(default_factory=list)
    head: ClassifierHead | None = None

    @property
    def depth(self) -> int:
        return len(self.blocks)

    @property
    def feature_dim(self) -> int:
        return self.budget.d_hat * self.tau

    def parameters(self) -> Dict[str, np.ndarray]:
        """Named views of every tensor; in-place edits update the model."""
        params: Dict[str, np.ndarray] = {"input.weight": self.input_weight, "input.bias": self.input_bias}
        for index, block in enumerate(self.blocks):
            for name in BlockParameters.NAMES:
                params[f"blocks.{index}.{name}"] = getattr(block, name)
        assert self.head is not None
        for name in ClassifierHead.NAMES:
            params[f"head.{name}"] = getattr(self.head, name)
        return params

    def named_parameters(self) -> Iterator[Tuple[str, np.ndarray]]:
        return iter(self.parameters().items())

    def parameter_count(self) -> int:
        return int(sum(array.size for array in self.parameters().values()))

    def copy(self) -> "TransformerModel":
        return copy.deepcopy(self)

    def metadata(self) -> Dict[str, object]:
        return {
            "d_hat0": self.d_hat0,
            "tau": self.tau,
            "depth": self.depth,
            "num_classes": self.num_classes,
            "budget": list(self.budget.as_tuple()),
        }


Gradients = Dict[str, np.ndarray]
"""Gradient structure keyed exactly like ``TransformerModel.parameters()``."""
