from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd
from filelock import FileLock
from pydantic import BaseModel, Field

from domain.entities.report import EvaluationReport
from domain.entities.scores import MetricSummary
from domain.errors import IoError


class MetricsModel(BaseModel):
    id_acc: float = Field(ge=0, le=1)
    fpr_at_95: float = Field(ge=0, le=1)
    auroc: float = Field(ge=0, le=1)
    aupr_in: float = Field(ge=0, le=1)
    aupr_out: float = Field(ge=0, le=1)

    @classmethod
    def from_summary(cls, summary: MetricSummary) -> "MetricsModel":
        return cls(**summary.as_dict())


class HistogramModel(BaseModel):
    edges: List[float]
    id: List[int]
    ood: List[int]


class ReportDocument(BaseModel):
    schema_version: int
    config_hash: str
    seed: int
    task: str
    scorer: str
    threshold: float
    metrics: MetricsModel
    per_set: Dict[str, MetricsModel]
    score_histograms: Dict[str, HistogramModel]
    baseline: Optional[MetricsModel] = None

    @classmethod
    def from_report(cls, report: EvaluationReport) -> "ReportDocument":
        return cls(
            schema_version=report.schema_version,
            config_hash=report.config_hash,
            seed=report.seed,
            task=report.task,
            scorer=report.scorer,
            threshold=report.threshold,
            metrics=MetricsModel.from_summary(report.metrics),
            per_set={name: MetricsModel.from_summary(summary) for name, summary in report.per_set.items()},
            score_histograms={name: HistogramModel(**data) for name, data in report.score_histograms.items()},
            baseline=MetricsModel.from_summary(report.baseline) if report.baseline else None,
        )


def _dump(payload: Any) -> str:
    return json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


class JsonReportStore:
    """Writes reports as sorted-key JSON guarded by a sibling ``.lock`` file."""

    def write(self, path: Path, report: EvaluationReport) -> None:
        path = Path(path)
        document = ReportDocument.from_report(report)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with FileLock(str(path) + ".lock"):
                path.write_text(_dump(document.model_dump(mode="json", exclude_none=True)), encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot write report {path}: {exc}") from exc

    def read(self, path: Path) -> Dict[str, Any]:
        try:
            return json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise IoError(f"cannot read report {path}: {exc}") from exc


class PandasTableStore:
    """Result tables as ``<stem>.csv`` (pandas) plus the same rows in ``<stem>.json``."""

    def write(self, stem: Path, rows: List[Dict[str, Any]]) -> Tuple[Path, Path]:
        stem = Path(stem)
        csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
        try:
            stem.parent.mkdir(parents=True, exist_ok=True)
            with FileLock(str(stem) + ".lock"):
                pd.DataFrame(rows).to_csv(csv_path, index=False)
                json_path.write_text(_dump(rows), encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot write table {stem}: {exc}") from exc
        return csv_path, json_path

    @staticmethod
    def read_csv(path: Path) -> pd.DataFrame:
        try:
            return pd.read_csv(path)
        except OSError as exc:
            raise IoError(f"cannot read table {path}: {exc}") from exc


__all__ = ["JsonReportStore", "PandasTableStore", "ReportDocument"]
