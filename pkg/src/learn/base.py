"""
Base classifier interface.

Every fitted model exposes a real-valued decision score whose sign is the
prediction: positive when the score is above zero, negative otherwise
(a score of exactly zero is negative).
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, Union

import numpy as np
import scipy.sparse as sp

from ..models.classifier import Algorithm, TrainConfig
from ..models.features import LabeledMatrix, Matrix
from ..models.review import Sentiment
from ..utils.exceptions import TrainingError

FeatureInput = Union[Matrix, sp.spmatrix]


def as_rows(x: FeatureInput, dimension: int) -> Matrix:
    """
    Normalize one vector or a batch of rows to a 2-D float array or CSR matrix.

    Raises:
        TrainingError: If the width does not match ``dimension``
    """
    if sp.issparse(x):
        rows: Matrix = sp.csr_matrix(x, dtype=np.float64)
    else:
        rows = np.asarray(x, dtype=np.float64)
        if rows.ndim == 1:
            rows = rows[None, :]
    if rows.ndim != 2 or rows.shape[1] != dimension:
        raise TrainingError(f"expected {dimension} features, got shape {rows.shape}")
    return rows


def dense_rows(x: FeatureInput, dimension: int) -> np.ndarray:
    rows = as_rows(x, dimension)
    return rows.toarray() if sp.issparse(rows) else rows


def check_training_set(train: LabeledMatrix) -> None:
    if train.n_rows == 0:
        raise TrainingError("training set is empty")
    if not np.all(np.isin(train.labels, (0, 1))):
        raise TrainingError("labels must be 0 (negative) or 1 (positive)")


class ClassifierModel(ABC):
    """A fitted binary classifier."""

    def __init__(self, algorithm: Algorithm, feature_dimension: int, training_config: TrainConfig):
        self.algorithm = Algorithm(algorithm)
        self.feature_dimension = int(feature_dimension)
        self.training_config = training_config

    @abstractmethod
    def decision_function(self, x: FeatureInput) -> np.ndarray:
        """Decision scores for a vector or a batch of rows."""
        pass

    def decision_score(self, x: FeatureInput) -> float:
        """Decision score of a single feature vector."""
        scores = self.decision_function(x)
        if len(scores) != 1:
            raise TrainingError(f"decision_score takes one vector, got {len(scores)} rows")
        return float(scores[0])

    def predict(self, x: FeatureInput) -> np.ndarray:
        """Labels as an int8 array: 1 where the score is above zero, else 0."""
        return (self.decision_function(x) > 0).astype(np.int8)

    def predict_sentiment(self, x: FeatureInput) -> Sentiment:
        return Sentiment.from_int(int(self.decision_score(x) > 0))

    def training_accuracy(self, train: LabeledMatrix) -> float:
        return float(np.mean(self.predict(train.rows) == train.labels))

    @abstractmethod
    def parameters(self) -> Dict[str, Any]:
        """Learned state as JSON-compatible values."""
        pass

    def to_dict(self) -> Dict[str, Any]:
        return {
            "algorithm": self.algorithm.value,
            "feature_dimension": self.feature_dimension,
            "training_config": self.training_config.model_dump(mode="json"),
            "parameters": self.parameters(),
        }

    def __repr__(self) -> str:
        return f"{type(self).__name__}(algorithm={self.algorithm.value}, dimension={self.feature_dimension})"
