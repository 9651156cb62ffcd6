"""
Review models for the drug review corpus.

This module contains Pydantic models for single corpus rows and their
processed text, plus the containers produced by cleaning, splitting and
summarizing the corpus.
"""

from dataclasses import dataclass, field
import datetime as dt
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..utils.constants import NATIVE_DATE_FORMAT, RATING_MAX, RATING_MIN
from ..utils.exceptions import RowError


class Sentiment(str, Enum):
    """Binary review sentiment derived from the star rating."""
    POSITIVE = "positive"
    NEGATIVE = "negative"

    @property
    def as_int(self) -> int:
        """1 for positive, 0 for negative."""
        return 1 if self is Sentiment.POSITIVE else 0

    @classmethod
    def from_int(cls, value: int) -> "Sentiment":
        return cls.POSITIVE if value else cls.NEGATIVE


class ReviewRecord(BaseModel):
    """One row of the UCI drug review corpus."""

    model_config = ConfigDict(frozen=True)

    unique_id: int = Field(..., description="Corpus row identifier")
    drug_name: str = Field(..., description="Name of the drug reviewed")
    condition: Optional[str] = Field(None, description="Condition the drug was taken for")
    review_text: str = Field("", description="Review text with HTML entities decoded")
    rating: int = Field(..., ge=RATING_MIN, le=RATING_MAX, description="Star rating 1-10")
    date: dt.date = Field(..., description="Review date")
    useful_count: int = Field(..., ge=0, description="Users who found the review useful")

    @field_validator("condition", mode="before")
    @classmethod
    def blank_condition_is_missing(cls, v):
        """Treat empty or whitespace-only conditions as absent."""
        if v is None:
            return None
        if isinstance(v, float):  # pandas NaN
            return None
        v = str(v)
        return v if v.strip() else None

    @field_validator("rating", "useful_count", mode="before")
    @classmethod
    def integral_number(cls, v):
        """Accept integers and integral decimals such as "9.0"; reject anything else."""
        if isinstance(v, bool):
            raise ValueError("expected an integer")
        if isinstance(v, int):
            return v
        text = str(v).strip()
        try:
            number = float(text)
        except ValueError:
            raise ValueError(f"not a number: {text!r}")
        if not number.is_integer():
            raise ValueError(f"not an integer: {text!r}")
        return int(number)

    @field_validator("date", mode="before")
    @classmethod
    def parse_review_date(cls, v):
        """Accept the corpus format ("May 20, 2009") and ISO-8601 dates."""
        if isinstance(v, dt.datetime):
            return v.date()
        if isinstance(v, dt.date):
            return v
        text = str(v).strip()
        try:
            return dt.datetime.strptime(text, NATIVE_DATE_FORMAT).date()
        except ValueError:
            pass
        try:
            return dt.date.fromisoformat(text)
        except ValueError:
            raise ValueError(f"unparseable date: {text!r}")


class ProcessedDoc(BaseModel):
    """A review after the text preprocessing chain."""

    model_config = ConfigDict(frozen=True)

    record_id: int
    raw_text: str
    combined_text: str
    cleaned_text: str
    tokens: Tuple[str, ...] = Field(default_factory=tuple)


@dataclass
class ParsedCorpus:
    """Records parsed from a TSV file together with the rows that failed."""

    records: List[ReviewRecord]
    errors: List[RowError] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


@dataclass(frozen=True)
class CorpusSplit:
    """Train/test partition of a cleaned corpus."""

    train: Tuple[ReviewRecord, ...]
    test: Tuple[ReviewRecord, ...]
    seed: int
    train_fraction: float

    def train_ids(self) -> List[int]:
        return [r.unique_id for r in self.train]

    def test_ids(self) -> List[int]:
        return [r.unique_id for r in self.test]


class CleaningReport(BaseModel):
    """Row counts removed by each cleaning rule."""

    input_rows: int = 0
    null_condition: int = 0
    junk_condition: int = 0
    duplicate_id: int = 0
    output_rows: int = 0

    @property
    def removed(self) -> int:
        return self.null_condition + self.junk_condition + self.duplicate_id


class UsefulCountSummary(BaseModel):
    """Spread of the useful-count column."""

    min: float = 0.0
    max: float = 0.0
    mean: float = 0.0
    std: float = 0.0


class CorpusStats(BaseModel):
    """Tabular summaries of a corpus: condition drug counts, ratings, labels and useful counts."""

    row_count: int = Field(..., ge=0)
    condition_drug_counts: Dict[str, int] = Field(
        default_factory=dict,
        description="Distinct drugs per condition, sorted descending",
    )
    condition_review_counts: Dict[str, int] = Field(default_factory=dict)
    rating_histogram: List[int] = Field(
        default_factory=lambda: [0] * RATING_MAX,
        description="Review counts for ratings 1..10",
    )
    label_counts: Dict[str, int] = Field(default_factory=dict)
    useful_count: UsefulCountSummary = Field(default_factory=UsefulCountSummary)
    cleaning: Optional[CleaningReport] = None

    @field_validator("rating_histogram")
    @classmethod
    def ten_bins(cls, v):
        if len(v) != RATING_MAX:
            raise ValueError(f"rating histogram needs {RATING_MAX} bins, got {len(v)}")
        return v
