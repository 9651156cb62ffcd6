"""
Multinomial naive Bayes for count and TF-IDF features.
"""

from typing import Any, Dict, Optional

import numpy as np
import scipy.sparse as sp
from loguru import logger

from ..models.classifier import Algorithm, TrainConfig, default_train_config
from ..models.features import LabeledMatrix
from ..utils.exceptions import TrainingError
from .base import ClassifierModel, FeatureInput, as_rows, check_training_set


class NaiveBayesModel(ClassifierModel):
    """
    Class log-priors and per-feature class-conditional log-probabilities.

    The decision score is the log-posterior difference (positive minus
    negative), which is linear in the features.
    """

    def __init__(
        self,
        class_log_prior: np.ndarray,
        feature_log_prob: np.ndarray,
        training_config: TrainConfig,
    ):
        feature_log_prob = np.asarray(feature_log_prob, dtype=np.float64)
        super().__init__(Algorithm.MULTINOMIAL_NB, feature_log_prob.shape[1], training_config)
        # row 0 = negative, row 1 = positive
        self.class_log_prior = np.asarray(class_log_prior, dtype=np.float64)
        self.feature_log_prob = feature_log_prob
        self._weights = feature_log_prob[1] - feature_log_prob[0]
        self._bias = float(self.class_log_prior[1] - self.class_log_prior[0])

    def decision_function(self, x: FeatureInput) -> np.ndarray:
        rows = as_rows(x, self.feature_dimension)
        return np.asarray(rows @ self._weights).ravel() + self._bias

    def parameters(self) -> Dict[str, Any]:
        return {
            "class_log_prior": self.class_log_prior.tolist(),
            "feature_log_prob": self.feature_log_prob.tolist(),
        }

    @classmethod
    def from_parameters(cls, algorithm: Algorithm, config: TrainConfig, params: Dict[str, Any]) -> "NaiveBayesModel":
        return cls(np.array(params["class_log_prior"]), np.array(params["feature_log_prob"]), config)


def fit_multinomial_nb(train: LabeledMatrix, config: Optional[TrainConfig] = None, alpha: Optional[float] = None) -> NaiveBayesModel:
    """
    Fit multinomial naive Bayes with additive smoothing.

    Args:
        train: Non-negative feature rows and 0/1 labels
        config: Training config; ``alpha`` is read from it unless given directly
        alpha: Smoothing constant, > 0

    Raises:
        TrainingError: On negative feature values or single-class labels
    """
    config = config or default_train_config(Algorithm.MULTINOMIAL_NB)
    alpha = config.alpha if alpha is None else alpha
    if alpha <= 0:
        raise TrainingError(f"alpha must be positive, got {alpha}")
    if alpha != config.alpha:
        config = config.model_copy(update={"alpha": alpha})
    check_training_set(train)

    rows = train.rows
    minimum = rows.min() if rows.shape[1] else 0.0
    if minimum < 0:
        raise TrainingError("multinomial naive Bayes needs non-negative features")

    counts = np.bincount(train.labels, minlength=2)
    if np.any(counts == 0):
        raise TrainingError("multinomial naive Bayes needs both classes in the training data")

    totals = np.zeros((2, rows.shape[1]), dtype=np.float64)
    for label in (0, 1):
        mask = train.labels == label
        part = rows[mask]
        totals[label] = np.asarray(part.sum(axis=0)).ravel() if sp.issparse(part) else part.sum(axis=0)

    smoothed = totals + alpha
    feature_log_prob = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))
    class_log_prior = np.log(counts / counts.sum())

    model = NaiveBayesModel(class_log_prior, feature_log_prob, config)
    logger.info(
        f"Fitted multinomial_nb on {train.n_rows} rows x {train.dimension} features "
        f"(alpha {alpha}): training accuracy {model.training_accuracy(train):.4f}"
    )
    return model
