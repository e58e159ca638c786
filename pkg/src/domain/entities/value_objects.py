from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional


class ProjectionKind(str, Enum):
    PCA = "pca"
    LDA = "lda"


class OodSources(str, Enum):
    """Which boundary groups feed fake-OOD generation."""

    NONE = "none"
    PCA = "pca"
    LDA = "lda"
    PCA_LDA = "pca+lda"

    @property
    def uses_pca(self) -> bool:
        return self in (OodSources.PCA, OodSources.PCA_LDA)

    @property
    def uses_lda(self) -> bool:
        return self in (OodSources.LDA, OodSources.PCA_LDA)


class ScorerType(str, Enum):
    MSP = "msp"
    ENERGY = "energy"
    VIM = "vim"


class TaskType(str, Enum):
    APPENDIX_C = "appendix_c"
    CAPACITY_SWEEP = "capacity_sweep"
    INGEST = "ingest"


class OptimizerType(str, Enum):
    ADAMW = "adamw"
    SGD = "sgd"


@dataclass(frozen=True)
class Provenance:
    """Origin of a boundary point / fake-OOD sample: PCA group or LDA class group."""

    kind: ProjectionKind
    class_id: Optional[int] = None

    @classmethod
    def pca(cls) -> "Provenance":
        return cls(ProjectionKind.PCA)

    @classmethod
    def lda(cls, class_id: int) -> "Provenance":
        return cls(ProjectionKind.LDA, int(class_id))

    def label(self) -> str:
        if self.kind is ProjectionKind.PCA:
            return "pca"
        return f"lda:{self.class_id}"

    @classmethod
    def parse(cls, text: str) -> "Provenance":
        if text == "pca":
            return cls.pca()
        kind, _, class_id = text.partition(":")
        if kind != "lda" or not class_id:
            raise ValueError(f"Unknown provenance '{text}'")
        return cls.lda(int(class_id))
