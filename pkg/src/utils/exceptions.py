"""
Exception hierarchy for the drug review recommender.

Every failure the library raises on purpose derives from ``DrugRecError`` so the
CLI can map it to a diagnostic and a nonzero exit status.
"""

from typing import Optional


class DrugRecError(Exception):
    """Base exception for drug review recommender errors."""
    pass


class ConfigError(DrugRecError, ValueError):
    """Raised when a pipeline configuration is invalid."""
    pass


class CorpusFormatError(DrugRecError):
    """Raised when the review file cannot be parsed at all (missing header, broken structure)."""
    pass


class RowError(DrugRecError):
    """A single malformed data row. Collected during parsing rather than raised."""

    def __init__(self, line: int, reason: str, unique_id: Optional[str] = None):
        self.line = line
        self.reason = reason
        self.unique_id = unique_id
        super().__init__(f"line {line}: {reason}")


class LabelError(DrugRecError, ValueError):
    """Raised when a rating falls outside the 1-10 scale."""
    pass


class EmptyCorpusError(DrugRecError, ValueError):
    """Raised when an operation needs at least one record or document."""
    pass


class VocabularyError(DrugRecError, KeyError):
    """Raised when a gram is looked up that the vocabulary does not hold."""
    pass


class ResamplingError(DrugRecError, ValueError):
    """Raised when SMOTE cannot run on the given data."""
    pass


class TrainingError(DrugRecError, ValueError):
    """Raised when a classifier cannot be fitted or applied to the given data."""
    pass


class MetricError(DrugRecError, ValueError):
    """Raised for invalid metric inputs (length mismatch, empty, single class)."""
    pass


class RecommendationError(DrugRecError, ValueError):
    """Raised when recommender inputs are incomplete or a condition is unknown."""
    pass


class StageDependencyError(DrugRecError):
    """Raised when a pipeline stage needs an artifact that is missing or was built under another configuration."""

    def __init__(self, artifact: str, stage: Optional[str] = None, stale: bool = False):
        self.artifact = artifact
        self.stage = stage
        self.stale = stale
        hint = f" (run the '{stage}' stage first)" if stage else ""
        if stale:
            super().__init__(f"stale artifact: {artifact} was built with a different configuration{hint}")
        else:
            super().__init__(f"missing artifact: {artifact}{hint}")
