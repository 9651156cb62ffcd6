"""
Drug recommendations from combined model votes and normalized useful counts.

Each scored review contributes ``votes * norm_useful`` to its drug under its
condition, where ``votes`` is how many winner models predict it positive and
``norm_useful`` is its useful count min-max scaled within the condition. The
summed overall score is divided by the condition's distinct-drug count (or
the drug's review count, or nothing) to give the final score.
"""

from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import pandas as pd
from loguru import logger

from .models.pipeline import Divisor
from .models.report import CombinedPrediction, RecommendationEntry, RecommendationTable
from .models.review import ReviewRecord, Sentiment
from .utils.constants import DEFAULT_TOP_CONDITIONS, DEFAULT_TOP_N
from .utils.exceptions import RecommendationError
from .utils.io import PathLike, write_csv, write_json

Vote = Union[int, bool, Sentiment]

# Condition key for records without a condition
MISSING_CONDITION = ""


@dataclass(frozen=True)
class ScoredReview:
    """One review ready for drug scoring."""

    record_id: int
    condition: str
    drug: str
    votes: int
    norm_useful: float

    @property
    def score(self) -> float:
        return self.votes * self.norm_useful


def _as_binary(value: Vote, model: str) -> int:
    if isinstance(value, Sentiment):
        return value.as_int
    if value in (0, 1):
        return int(value)
    raise RecommendationError(f"prediction of {model} must be 0/1 or a Sentiment, got {value!r}")


def combine_predictions(
    record_id: int,
    predictions: Mapping[str, Vote],
    models: Sequence[str],
) -> CombinedPrediction:
    """
    Sum the positive votes of the winner models on one review.

    Args:
        record_id: Review the predictions belong to
        predictions: Prediction per model identifier
        models: Expected model identifiers, in vote order

    Raises:
        RecommendationError: If a model output is missing or an unexpected one is present
    """
    missing = [m for m in models if m not in predictions]
    if missing:
        raise RecommendationError(f"record {record_id}: missing output of {', '.join(missing)}")
    extra = sorted(set(predictions) - set(models))
    if extra:
        raise RecommendationError(f"record {record_id}: unexpected output of {', '.join(extra)}")
    values = tuple(_as_binary(predictions[m], m) for m in models)
    return CombinedPrediction(record_id=record_id, predictions=values, votes=sum(values))


def combine_all(
    record_ids: Sequence[int],
    model_predictions: Mapping[str, Sequence[Vote]],
    models: Sequence[str],
) -> List[CombinedPrediction]:
    """Combine whole prediction columns, one per model, aligned with ``record_ids``."""
    for model in models:
        column = model_predictions.get(model)
        if column is not None and len(column) != len(record_ids):
            raise RecommendationError(
                f"{model} has {len(column)} predictions for {len(record_ids)} records"
            )
    combined = []
    for i, record_id in enumerate(record_ids):
        row = {m: model_predictions[m][i] for m in model_predictions}
        combined.append(combine_predictions(int(record_id), row, models))
    return combined


def _condition_key(record: ReviewRecord) -> str:
    return record.condition if record.condition is not None else MISSING_CONDITION


def normalize_usefulcount(records: Iterable[ReviewRecord]) -> Dict[int, float]:
    """
    Min-max scale useful counts within each condition.

    A condition whose counts are all equal (including a single review) maps
    every review to 1.0.

    Returns:
        Normalized useful count per record id, in [0, 1]
    """
    groups: Dict[str, List[ReviewRecord]] = defaultdict(list)
    for record in records:
        groups[_condition_key(record)].append(record)

    normalized: Dict[int, float] = {}
    for members in groups.values():
        counts = [r.useful_count for r in members]
        low, high = min(counts), max(counts)
        for r in members:
            normalized[r.unique_id] = 1.0 if high == low else (r.useful_count - low) / (high - low)
    return normalized


def scored_reviews(
    records: Sequence[ReviewRecord],
    combined: Sequence[CombinedPrediction],
    normalized: Optional[Mapping[int, float]] = None,
) -> List[ScoredReview]:
    """Join records with their votes and normalized useful counts."""
    votes = {c.record_id: c.votes for c in combined}
    normalized = normalized if normalized is not None else normalize_usefulcount(records)
    out = []
    for r in records:
        if r.unique_id not in votes:
            raise RecommendationError(f"record {r.unique_id} has no combined prediction")
        out.append(
            ScoredReview(
                record_id=r.unique_id,
                condition=_condition_key(r),
                drug=r.drug_name,
                votes=votes[r.unique_id],
                norm_useful=normalized[r.unique_id],
            )
        )
    return out


def _rank_condition(
    condition: str, reviews: Sequence[ScoredReview], divisor: Divisor
) -> List[RecommendationEntry]:
    overall: Dict[str, float] = defaultdict(float)
    counts: Dict[str, int] = defaultdict(int)
    for review in reviews:
        overall[review.drug] += review.score
        counts[review.drug] += 1

    n_drugs = len(overall)
    finals: List[Tuple[str, float]] = []
    for drug, total in overall.items():
        if divisor is Divisor.DRUG_COUNT:
            final = total / n_drugs
        elif divisor is Divisor.REVIEW_COUNT:
            final = total / counts[drug]
        else:
            final = total
        finals.append((drug, final))

    finals.sort(key=lambda item: (-item[1], item[0]))
    return [
        RecommendationEntry(
            condition=condition,
            rank=rank,
            drug=drug,
            final_score=final,
            overall_score=overall[drug],
            review_count=counts[drug],
        )
        for rank, (drug, final) in enumerate(finals, start=1)
    ]


def score_drugs(
    scored: Iterable[ScoredReview],
    divisor: Divisor = Divisor.DRUG_COUNT,
    models: Sequence[str] = (),
    max_workers: int = 1,
) -> RecommendationTable:
    """
    Rank drugs within every condition by final score.

    Ties are broken by drug name. Conditions are independent and may be
    ranked on ``max_workers`` threads without changing the result.

    Raises:
        RecommendationError: If the scored set is empty
    """
    by_condition: Dict[str, List[ScoredReview]] = defaultdict(list)
    for review in scored:
        by_condition[review.condition].append(review)
    if not by_condition:
        raise RecommendationError("cannot score drugs from an empty set of reviews")

    conditions = sorted(by_condition)
    divisor = Divisor(divisor)
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            ranked = list(executor.map(lambda c: _rank_condition(c, by_condition[c], divisor), conditions))
    else:
        ranked = [_rank_condition(c, by_condition[c], divisor) for c in conditions]

    table = RecommendationTable(
        rankings=dict(zip(conditions, ranked)),
        models=list(models),
        divisor=divisor,
        condition_review_counts={c: len(by_condition[c]) for c in conditions},
    )
    logger.info(
        f"Ranked drugs for {len(conditions)} conditions from "
        f"{sum(table.condition_review_counts.values())} reviews (divisor: {divisor.value})"
    )
    return table


def top_n(table: RecommendationTable, condition: str, n: int = DEFAULT_TOP_N) -> List[RecommendationEntry]:
    """
    The ``n`` best-ranked drugs for a condition (fewer if it has fewer drugs).

    Raises:
        RecommendationError: If the condition is not in the table
    """
    if condition not in table.rankings:
        raise RecommendationError(f"unknown condition: {condition!r}")
    if n < 0:
        raise RecommendationError(f"n must be non-negative, got {n}")
    return table.rankings[condition][:n]


def top_conditions(table: RecommendationTable, n: int = DEFAULT_TOP_CONDITIONS) -> List[str]:
    """Conditions with the most scored reviews, ties by name."""
    ordered = sorted(table.condition_review_counts.items(), key=lambda item: (-item[1], item[0]))
    return [condition for condition, _ in ordered[:n]]


def recommendations_frame(
    table: RecommendationTable,
    n: Optional[int] = None,
    conditions: Optional[Sequence[str]] = None,
) -> pd.DataFrame:
    """
    Flat ranking rows (condition, rank, drug, final_score).

    Args:
        table: Scored rankings
        n: Keep only the first ``n`` drugs per condition
        conditions: Conditions to include, in output order; all (sorted) by default
    """
    selected = list(conditions) if conditions is not None else table.conditions
    rows = []
    for condition in selected:
        entries = top_n(table, condition, n if n is not None else len(table.rankings.get(condition, [])))
        for e in entries:
            rows.append({"condition": e.condition, "rank": e.rank, "drug": e.drug, "final_score": e.final_score})
    return pd.DataFrame(rows, columns=["condition", "rank", "drug", "final_score"])


def write_recommendations(
    table: RecommendationTable,
    out_dir: PathLike,
    n: int = DEFAULT_TOP_N,
    n_conditions: int = DEFAULT_TOP_CONDITIONS,
) -> List[Path]:
    """
    Write the top-``n`` view of the ``n_conditions`` most-reviewed conditions
    (recommendations.csv / .json) and the full ranking (rankings.csv / .json).
    """
    out = Path(out_dir)
    view_conditions = top_conditions(table, n_conditions)
    view = recommendations_frame(table, n, view_conditions)
    view_json = {
        "divisor": table.divisor.value,
        "models": table.models,
        "top_n": n,
        "conditions": [
            {
                "condition": c,
                "review_count": table.condition_review_counts[c],
                "drugs": [e.model_dump(mode="json") for e in top_n(table, c, n)],
            }
            for c in view_conditions
        ],
    }
    return [
        write_csv(out / "recommendations.csv", view),
        write_json(out / "recommendations.json", view_json),
        write_csv(out / "rankings.csv", recommendations_frame(table)),
        write_json(out / "rankings.json", table.model_dump(mode="json")),
    ]
