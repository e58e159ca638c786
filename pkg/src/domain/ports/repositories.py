from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, List, Protocol, Tuple

from ..entities.features import FeatureBatch
from ..entities.grod import GrodState
from ..entities.model import TransformerModel
from ..entities.report import EvaluationReport


class FeatureStore(Protocol):
    def write(self, path: Path, batch: FeatureBatch) -> None: ...

    def read(self, path: Path, allow_ood: bool = False) -> FeatureBatch: ...


class CheckpointStore(Protocol):
    def save(self, path: Path, model: TransformerModel) -> None: ...

    def load(self, path: Path) -> TransformerModel: ...


class GrodStateStore(Protocol):
    def save(self, path: Path, state: GrodState) -> None: ...

    def load(self, path: Path) -> GrodState: ...


class ReportStore(Protocol):
    def write(self, path: Path, report: EvaluationReport) -> None: ...

    def read(self, path: Path) -> Dict[str, Any]: ...


class TableStore(Protocol):
    def write(self, stem: Path, rows: List[Dict[str, Any]]) -> Tuple[Path, Path]: ...
