from __future__ import annotations

import numpy as np
import pytest

from application.services.detector import build_model
from application.services.synthdata import gen_ingest_sets
from domain.entities.value_objects import ScorerType
from domain.errors import EmptyClass
from domain.usecases.evaluate_detector import EvaluateDetector
from tests.support.builders import SMALL_BUDGET, tiny_config


@pytest.fixture(scope="module")
def data():
    return gen_ingest_sets(3, 8, n_train=40, n_test=20, separation=6.0, seed=11)


@pytest.fixture(scope="module")
def model(data):
    return build_model(8, 3, SMALL_BUDGET, depth=0, seed=0, head_only=True)


@pytest.mark.parametrize("scorer", [ScorerType.MSP, ScorerType.ENERGY, ScorerType.VIM])
def test_report_carries_metrics_threshold_and_histograms(data, model, scorer):
    config = tiny_config(task="ingest", vim_dim=2)
    result = EvaluateDetector().execute(model, data.train_batch(), {"test.csv": data.test_batch()}, config, 3, scorer)
    report = result.report
    assert report.scorer == scorer.value
    assert report.seed == 3
    assert report.config_hash == config.config_hash()
    assert set(report.per_set) == {"test.csv"}
    assert 0.0 <= report.metrics.auroc <= 1.0
    histogram = report.score_histograms["test.csv"]
    assert sum(histogram["id"]) == 60 and sum(histogram["ood"]) == 20
    id_scores = result.score_reports["test.csv"].scores[:60]
    assert np.mean(id_scores >= report.threshold) >= config.tpr


def test_score_rows_use_one_based_labels(data, model):
    config = tiny_config(task="ingest", scorer="msp")
    result = EvaluateDetector().execute(model, data.train_batch(), {"test.csv": data.test_batch()}, config, 0)
    rows = result.score_rows("test.csv")
    assert len(rows) == 80
    assert {row["label"] for row in rows} == {1, 2, 3, 4}
    assert all(1 <= row["prediction"] <= 4 for row in rows)


def test_metrics_are_pooled_over_several_sets(data, model):
    config = tiny_config(task="ingest", scorer="msp")
    test = data.test_batch()
    half = test.rows // 2
    order = np.random.default_rng(0).permutation(test.rows)
    sets = {"a.csv": test.subset(np.sort(order[:half])), "b.csv": test.subset(np.sort(order[half:]))}
    split = EvaluateDetector().execute(model, data.train_batch(), sets, config, 0).report
    whole = EvaluateDetector().execute(model, data.train_batch(), {"all.csv": test}, config, 0).report
    assert split.metrics.auroc == pytest.approx(whole.metrics.auroc)
    assert split.threshold == pytest.approx(whole.threshold)


def test_no_evaluation_sets_is_an_error(data, model):
    with pytest.raises(EmptyClass):
        EvaluateDetector().execute(model, data.train_batch(), {}, tiny_config(), 0)
