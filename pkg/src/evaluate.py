"""
Classification metrics and evaluation reports.

Precision, recall, accuracy and F1 follow their textbook definitions; a
metric whose denominator is zero is reported as 0.0 and flagged rather than
raised. ROC-AUC is the Mann-Whitney rank statistic with ties counted half.
"""

from pathlib import Path
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from scipy.stats import rankdata

from .learn.base import ClassifierModel, FeatureInput
from .models.report import ClassMetrics, ConfusionCounts, EvaluationReport
from .models.review import Sentiment
from .utils.exceptions import MetricError
from .utils.io import PathLike, write_csv, write_json

LabelSequence = Union[Sequence[int], Sequence[Sentiment], np.ndarray]


def _binary(values: LabelSequence, name: str) -> np.ndarray:
    items = list(values) if not isinstance(values, np.ndarray) else values
    if len(items) and isinstance(items[0], Sentiment):
        return np.array([v.as_int for v in items], dtype=np.int8)
    arr = np.asarray(items).astype(np.int64)
    if not np.all(np.isin(arr, (0, 1))):
        raise MetricError(f"{name} must be binary (0/1 or Sentiment)")
    return arr.astype(np.int8)


def confusion(predictions: LabelSequence, labels: LabelSequence) -> ConfusionCounts:
    """
    Confusion counts with positive sentiment as the positive class.

    Raises:
        MetricError: On empty input or a length mismatch
    """
    pred = _binary(predictions, "predictions")
    true = _binary(labels, "labels")
    if len(pred) != len(true):
        raise MetricError(f"length mismatch: {len(pred)} predictions vs {len(true)} labels")
    if len(true) == 0:
        raise MetricError("cannot score an empty prediction set")
    return ConfusionCounts(
        tp=int(np.sum((pred == 1) & (true == 1))),
        tn=int(np.sum((pred == 0) & (true == 0))),
        fp=int(np.sum((pred == 1) & (true == 0))),
        fn=int(np.sum((pred == 0) & (true == 1))),
    )


def _ratio(numerator: float, denominator: float) -> Tuple[float, bool]:
    """(value, flagged); a zero denominator gives (0.0, True)."""
    if denominator == 0:
        return 0.0, True
    return numerator / denominator, False


def precision(c: ConfusionCounts, positive_class: bool = True) -> float:
    """TP / (TP + FP); pass ``positive_class=False`` for the negative-class variant."""
    c = c if positive_class else c.swapped()
    return _ratio(c.tp, c.tp + c.fp)[0]


def recall(c: ConfusionCounts, positive_class: bool = True) -> float:
    """TP / (TP + FN)."""
    c = c if positive_class else c.swapped()
    return _ratio(c.tp, c.tp + c.fn)[0]


def accuracy(c: ConfusionCounts) -> float:
    """(TP + TN) / total."""
    return _ratio(c.tp + c.tn, c.total)[0]


def f1(c: ConfusionCounts, positive_class: bool = True) -> float:
    """Harmonic mean of precision and recall."""
    p, r = precision(c, positive_class), recall(c, positive_class)
    return _ratio(2.0 * p * r, p + r)[0]


def class_metrics(c: ConfusionCounts, positive_class: bool = True) -> ClassMetrics:
    """Precision, recall and F1 for one class, flagging zero denominators."""
    role = c if positive_class else c.swapped()
    p, p_flag = _ratio(role.tp, role.tp + role.fp)
    r, r_flag = _ratio(role.tp, role.tp + role.fn)
    f, f_flag = _ratio(2.0 * p * r, p + r)
    flags = [name for name, flagged in (("precision", p_flag), ("recall", r_flag), ("f1", f_flag)) if flagged]
    return ClassMetrics(
        label=(Sentiment.POSITIVE if positive_class else Sentiment.NEGATIVE).value,
        precision=p,
        recall=r,
        f1=f,
        support=role.tp + role.fn,
        flags=flags,
    )


def roc_auc(scores: Sequence[float], labels: LabelSequence) -> float:
    """
    Area under the ROC curve from the rank-sum statistic.

    Equal to the fraction of (positive, negative) pairs where the positive
    scores higher, counting ties as one half.

    Raises:
        MetricError: On a length mismatch, empty input or a single class
    """
    s = np.asarray(scores, dtype=np.float64)
    y = _binary(labels, "labels")
    if len(s) != len(y):
        raise MetricError(f"length mismatch: {len(s)} scores vs {len(y)} labels")
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("ROC-AUC needs both classes among the labels")
    if not np.all(np.isfinite(s)):
        raise MetricError("scores must be finite")
    ranks = rankdata(s, method="average")
    u = float(ranks[y == 1].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def evaluate_model(
    model: ClassifierModel,
    x_test: FeatureInput,
    y_test: LabelSequence,
    model_name: str = "",
    representation: str = "",
) -> EvaluationReport:
    """
    Score a fitted model on held-out rows.

    Returns:
        Report with both classes' precision/recall/F1, accuracy and AUC of the decision scores
    """
    labels = _binary(y_test, "labels")
    scores = model.decision_function(x_test)
    predictions = (scores > 0).astype(np.int8)
    counts = confusion(predictions, labels)
    report = EvaluationReport(
        model=model_name or model.algorithm.value,
        representation=representation,
        n_test=len(labels),
        positive=class_metrics(counts, True),
        negative=class_metrics(counts, False),
        accuracy=accuracy(counts),
        auc=roc_auc(scores, labels),
        confusion=counts,
    )
    flags = report.positive.flags + report.negative.flags
    logger.info(
        f"Evaluated {report.model_id}: accuracy {report.accuracy:.4f}, AUC {report.auc:.4f}"
        + (f" (zero-denominator metrics: {', '.join(flags)})" if flags else "")
    )
    return report


def reports_frame(reports: Iterable[EvaluationReport]) -> pd.DataFrame:
    """One row per model and class."""
    rows = [row for report in reports for row in report.rows()]
    columns = ["representation", "model", "class", "precision", "recall", "f1", "support", "accuracy", "auc", "flags"]
    return pd.DataFrame(rows, columns=columns)


def representation_table(reports: Iterable[EvaluationReport], representation: str) -> pd.DataFrame:
    """
    Result table for one representation: a row per model, with precision,
    recall and F1 for each class followed by accuracy and AUC.
    """
    records = []
    for r in reports:
        if r.representation != representation:
            continue
        records.append(
            {
                "model": r.model,
                "pos_precision": r.positive.precision,
                "pos_recall": r.positive.recall,
                "pos_f1": r.positive.f1,
                "neg_precision": r.negative.precision,
                "neg_recall": r.negative.recall,
                "neg_f1": r.negative.f1,
                "accuracy": r.accuracy,
                "auc": r.auc,
            }
        )
    return pd.DataFrame(
        records,
        columns=["model", "pos_precision", "pos_recall", "pos_f1", "neg_precision", "neg_recall", "neg_f1", "accuracy", "auc"],
    )


def write_reports(reports: Sequence[EvaluationReport], out_dir: PathLike) -> List[Path]:
    """Write evaluation.csv, evaluation.json and one table per representation."""
    out = Path(out_dir)
    ordered = sorted(reports, key=lambda r: (r.representation, r.model))
    written = [
        write_csv(out / "evaluation.csv", reports_frame(ordered)),
        write_json(out / "evaluation.json", [r.model_dump(mode="json") for r in ordered]),
    ]
    for rep in sorted({r.representation for r in ordered}):
        written.append(write_csv(out / f"evaluation_{rep}.csv", representation_table(ordered, rep)))
    return written
