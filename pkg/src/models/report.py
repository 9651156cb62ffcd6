"""
Evaluation and recommendation report models.
"""

from typing import Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .pipeline import Divisor


class ConfusionCounts(BaseModel):
    """Binary confusion counts with positive sentiment as the positive class."""

    model_config = ConfigDict(frozen=True)

    tp: int = Field(0, ge=0)
    tn: int = Field(0, ge=0)
    fp: int = Field(0, ge=0)
    fn: int = Field(0, ge=0)

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def swapped(self) -> "ConfusionCounts":
        """Counts with the negative class in the positive role."""
        return ConfusionCounts(tp=self.tn, tn=self.tp, fp=self.fn, fn=self.fp)


class ClassMetrics(BaseModel):
    """Precision, recall and F1 for one class; ``flags`` names metrics whose denominator was zero."""

    label: str
    precision: float = Field(..., ge=0, le=1)
    recall: float = Field(..., ge=0, le=1)
    f1: float = Field(..., ge=0, le=1)
    support: int = Field(0, ge=0)
    flags: List[str] = Field(default_factory=list)


class EvaluationReport(BaseModel):
    """Test-set metrics of one model on one feature representation."""

    model: str
    representation: str
    n_test: int = Field(..., ge=0)
    positive: ClassMetrics
    negative: ClassMetrics
    accuracy: float = Field(..., ge=0, le=1)
    auc: float = Field(..., ge=0, le=1)
    confusion: ConfusionCounts

    @property
    def model_id(self) -> str:
        return f"{self.representation}__{self.model}"

    def rows(self) -> List[Dict[str, object]]:
        """One flat row per class, positive first."""
        out = []
        for metrics in (self.positive, self.negative):
            out.append(
                {
                    "representation": self.representation,
                    "model": self.model,
                    "class": metrics.label,
                    "precision": metrics.precision,
                    "recall": metrics.recall,
                    "f1": metrics.f1,
                    "support": metrics.support,
                    "accuracy": self.accuracy,
                    "auc": self.auc,
                    "flags": ";".join(metrics.flags),
                }
            )
        return out


class CombinedPrediction(BaseModel):
    """Votes of the winner models on one review."""

    model_config = ConfigDict(frozen=True)

    record_id: int
    predictions: Tuple[int, ...]
    votes: int = Field(..., ge=0)

    @model_validator(mode="after")
    def votes_match(self):
        if any(p not in (0, 1) for p in self.predictions):
            raise ValueError("predictions must be 0 or 1")
        if self.votes != sum(self.predictions):
            raise ValueError(f"votes {self.votes} != sum of predictions {sum(self.predictions)}")
        return self


class RecommendationEntry(BaseModel):
    """One ranked drug under a condition."""

    condition: str
    rank: int = Field(..., ge=1)
    drug: str
    final_score: float = Field(..., ge=0)
    overall_score: float = Field(..., ge=0)
    review_count: int = Field(..., ge=1)


class RecommendationTable(BaseModel):
    """Per-condition drug rankings and the models whose votes produced them."""

    rankings: Dict[str, List[RecommendationEntry]] = Field(default_factory=dict)
    models: List[str] = Field(default_factory=list)
    divisor: Divisor = Divisor.DRUG_COUNT
    condition_review_counts: Dict[str, int] = Field(default_factory=dict)

    @model_validator(mode="after")
    def scores_non_increasing(self):
        for condition, entries in self.rankings.items():
            scores = [e.final_score for e in entries]
            if any(a < b for a, b in zip(scores, scores[1:])):
                raise ValueError(f"rankings for {condition!r} are not sorted by final score")
        return self

    @property
    def conditions(self) -> List[str]:
        return sorted(self.rankings)
