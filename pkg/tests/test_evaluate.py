"""Tests for classification metrics and evaluation reports."""

import json

import numpy as np
import pandas as pd
import pytest

from src.evaluate import (
    accuracy,
    class_metrics,
    confusion,
    evaluate_model,
    f1,
    precision,
    recall,
    representation_table,
    roc_auc,
    write_reports,
)
from src.learn import fit_model
from src.models.classifier import Algorithm
from src.models.features import LabeledMatrix
from src.models.report import ConfusionCounts
from src.models.review import Sentiment
from src.utils.exceptions import MetricError


def _pairwise_auc(scores, labels):
    wins = 0.0
    pairs = 0
    for sp_, lp in zip(scores, labels):
        if lp != 1:
            continue
        for sn, ln in zip(scores, labels):
            if ln != 0:
                continue
            pairs += 1
            wins += 1.0 if sp_ > sn else 0.5 if sp_ == sn else 0.0
    return wins / pairs


class TestCounts:
    def test_against_naive_recount(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(1, 40))
            pred = rng.integers(0, 2, n)
            true = rng.integers(0, 2, n)
            c = confusion(pred, true)
            tp = sum(1 for p, t in zip(pred, true) if p == 1 and t == 1)
            tn = sum(1 for p, t in zip(pred, true) if p == 0 and t == 0)
            fp = sum(1 for p, t in zip(pred, true) if p == 1 and t == 0)
            fn = sum(1 for p, t in zip(pred, true) if p == 0 and t == 1)
            assert (c.tp, c.tn, c.fp, c.fn) == (tp, tn, fp, fn)
            assert accuracy(c) == pytest.approx((tp + tn) / n)
            if tp + fp:
                assert precision(c) == pytest.approx(tp / (tp + fp))
            if tn + fn:
                assert precision(c, positive_class=False) == pytest.approx(tn / (tn + fn))
            if tp + fn:
                assert recall(c) == pytest.approx(tp / (tp + fn))

    def test_sentiment_values(self):
        c = confusion([Sentiment.POSITIVE, Sentiment.NEGATIVE], [Sentiment.POSITIVE, Sentiment.POSITIVE])
        assert c == ConfusionCounts(tp=1, tn=0, fp=0, fn=1)

    def test_errors(self):
        with pytest.raises(MetricError):
            confusion([1, 0], [1])
        with pytest.raises(MetricError):
            confusion([], [])
        with pytest.raises(MetricError):
            confusion([2], [1])


class TestZeroDenominators:
    def test_no_positive_predictions(self):
        c = confusion([0, 0, 0], [1, 0, 0])
        metrics = class_metrics(c)
        assert metrics.precision == 0.0
        assert metrics.f1 == 0.0
        assert metrics.flags == ["precision", "f1"]
        assert class_metrics(c, positive_class=False).flags == []

    def test_f1(self):
        c = ConfusionCounts(tp=3, tn=5, fp=1, fn=2)
        assert f1(c) == pytest.approx(2 * 0.75 * 0.6 / 1.35)
        assert f1(ConfusionCounts(tn=4)) == 0.0


class TestAuc:
    def test_against_all_pairs_with_ties(self):
        rng = np.random.default_rng(1)
        checked = 0
        while checked < 300:
            n = int(rng.integers(2, 13))
            labels = rng.integers(0, 2, n)
            if labels.min() == labels.max():
                continue
            scores = rng.integers(0, 4, n).astype(float)
            assert roc_auc(scores, labels) == pytest.approx(_pairwise_auc(scores, labels))
            checked += 1

    def test_perfect_and_reversed(self):
        assert roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == pytest.approx(0.75)
        assert roc_auc([3, 2, 1], [1, 1, 0]) == 1.0
        assert roc_auc([1, 2, 3], [1, 1, 0]) == 0.0
        assert roc_auc([5, 5, 5, 5], [1, 0, 1, 0]) == 0.5

    def test_errors(self):
        with pytest.raises(MetricError):
            roc_auc([0.1, 0.2], [1, 1])
        with pytest.raises(MetricError):
            roc_auc([0.1], [1, 0])
        with pytest.raises(MetricError):
            roc_auc([np.nan, 0.2], [1, 0])


@pytest.fixture
def fitted():
    rng = np.random.default_rng(2)
    rows = np.vstack([rng.normal(1.0, 1.0, (60, 3)), rng.normal(-1.0, 1.0, (40, 3))])
    labels = np.array([1] * 60 + [0] * 40)
    return fit_model(Algorithm.LOGISTIC_REGRESSION, LabeledMatrix(rows=rows, labels=labels)), rows, labels


def test_evaluate_model(fitted):
    model, rows, labels = fitted
    report = evaluate_model(model, rows, labels, "logistic_regression", "manual")
    assert report.model_id == "manual__logistic_regression"
    assert report.n_test == 100
    assert report.positive.support == 60
    assert report.negative.support == 40
    assert report.confusion.total == 100
    assert report.accuracy == pytest.approx(accuracy(report.confusion))
    assert report.auc == pytest.approx(roc_auc(model.decision_function(rows), labels))
    assert report.auc > 0.8


def test_write_reports(fitted, tmp_path):
    model, rows, labels = fitted
    reports = [
        evaluate_model(model, rows, labels, "logistic_regression", "manual"),
        evaluate_model(model, rows, labels, "logistic_regression", "word2vec"),
    ]
    written = write_reports(reports, tmp_path)
    assert {p.name for p in written} == {
        "evaluation.csv", "evaluation.json", "evaluation_manual.csv", "evaluation_word2vec.csv"
    }
    frame = pd.read_csv(tmp_path / "evaluation.csv")
    assert len(frame) == 4
    assert list(frame["class"][:2]) == ["positive", "negative"]
    payload = json.loads((tmp_path / "evaluation.json").read_text())
    assert [r["representation"] for r in payload] == ["manual", "word2vec"]

    table = representation_table(reports, "manual")
    assert list(table.columns) == [
        "model", "pos_precision", "pos_recall", "pos_f1", "neg_precision", "neg_recall", "neg_f1", "accuracy", "auc"
    ]
    assert len(table) == 1
