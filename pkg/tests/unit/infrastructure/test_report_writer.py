from __future__ import annotations

import json
from pathlib import Path

import pytest
from pydantic import ValidationError

from domain.entities.report import EvaluationReport
from domain.entities.scores import MetricSummary
from infrastructure.persistence.report_writer import JsonReportStore, PandasTableStore, ReportDocument


def _report(**overrides) -> EvaluationReport:
    metrics = MetricSummary(id_acc=0.9, fpr_at_95=0.2, auroc=0.8, aupr_in=0.7, aupr_out=0.6)
    values = dict(
        config_hash="abc",
        seed=1,
        task="appendix_c",
        scorer="vim",
        threshold=0.5,
        metrics=metrics,
        per_set={"test.csv": metrics},
        score_histograms={"test.csv": {"edges": [0.0, 0.5, 1.0], "id": [1, 2], "ood": [2, 1]}},
    )
    values.update(overrides)
    return EvaluationReport(**values)


def test_report_json_is_sorted_and_stable(tmp_path: Path):
    store = JsonReportStore()
    store.write(tmp_path / "a" / "report.json", _report())
    store.write(tmp_path / "b" / "report.json", _report())
    first = (tmp_path / "a" / "report.json").read_bytes()
    assert first == (tmp_path / "b" / "report.json").read_bytes()
    payload = store.read(tmp_path / "a" / "report.json")
    assert list(payload) == sorted(payload)
    assert payload["metrics"]["auroc"] == 0.8
    assert "baseline" not in payload
    assert "timestamp" not in json.dumps(payload)


def test_baseline_metrics_are_written_when_present(tmp_path: Path):
    baseline = MetricSummary(1.0, 0.5, 0.6, 0.5, 0.5)
    JsonReportStore().write(tmp_path / "r.json", _report(baseline=baseline))
    assert JsonReportStore().read(tmp_path / "r.json")["baseline"]["auroc"] == 0.6


def test_report_document_validates_metric_ranges():
    with pytest.raises(ValidationError):
        ReportDocument.from_report(_report(metrics=MetricSummary(1.5, 0.0, 0.5, 0.5, 0.5)))


def test_tables_are_written_as_csv_and_json(tmp_path: Path):
    rows = [{"depth": 1, "ood_acc": 0.5}, {"depth": 2, "ood_acc": None}]
    csv_path, json_path = PandasTableStore().write(tmp_path / "tables" / "capacity_sweep", rows)
    assert csv_path.name == "capacity_sweep.csv" and json_path.name == "capacity_sweep.json"
    frame = PandasTableStore.read_csv(csv_path)
    assert list(frame.columns) == ["depth", "ood_acc"]
    assert frame["depth"].tolist() == [1, 2]
    assert json.loads(json_path.read_text(encoding="utf-8")) == rows
