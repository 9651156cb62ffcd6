"""
Classifier families for the review sentiment models.

Available algorithms:
- Linear SGD: logistic_regression, perceptron, ridge, sgd_hinge, linear_svc
- multinomial_nb: multinomial naive Bayes
- Trees: decision_tree, random_forest, gbdt (histogram gradient boosting)

Linear models and naive Bayes accept sparse or dense rows; tree learners
need dense rows (Word2Vec and manual features).
"""

from pathlib import Path
from typing import Any, Callable, Dict, Optional

from ..models.classifier import Algorithm, TrainConfig, default_train_config
from ..models.features import LabeledMatrix
from ..utils.exceptions import TrainingError
from ..utils.io import PathLike, read_json, write_json
from .base import ClassifierModel
from .boosting import fit_gbdt
from .linear import (
    LinearModel,
    fit_linear_sgd,
    fit_linear_svc,
    fit_logistic_regression,
    fit_perceptron,
    fit_ridge,
    fit_sgd_hinge,
)
from .naive_bayes import NaiveBayesModel, fit_multinomial_nb
from .trees import TreeEnsembleModel, fit_decision_tree, fit_random_forest

__all__ = [
    'ClassifierModel',
    'LinearModel',
    'NaiveBayesModel',
    'TreeEnsembleModel',
    'fit_linear_sgd',
    'fit_multinomial_nb',
    'fit_decision_tree',
    'fit_random_forest',
    'fit_gbdt',
    'fit_model',
    'model_from_dict',
    'save_model',
    'load_model',
    'MODEL_REGISTRY',
]

Fitter = Callable[[LabeledMatrix, Optional[TrainConfig]], ClassifierModel]

# Model registry for dynamic instantiation
MODEL_REGISTRY: Dict[Algorithm, Fitter] = {
    Algorithm.LOGISTIC_REGRESSION: fit_logistic_regression,
    Algorithm.PERCEPTRON: fit_perceptron,
    Algorithm.RIDGE: fit_ridge,
    Algorithm.SGD_HINGE: fit_sgd_hinge,
    Algorithm.LINEAR_SVC: fit_linear_svc,
    Algorithm.MULTINOMIAL_NB: fit_multinomial_nb,
    Algorithm.DECISION_TREE: fit_decision_tree,
    Algorithm.RANDOM_FOREST: fit_random_forest,
    Algorithm.GBDT: fit_gbdt,
}


def fit_model(algorithm: Algorithm, train: LabeledMatrix, config: Optional[TrainConfig] = None) -> ClassifierModel:
    """
    Factory function to fit any registered algorithm.

    Args:
        algorithm: Algorithm to fit
        train: Training rows and labels
        config: Optional hyperparameters; algorithm defaults otherwise

    Returns:
        Fitted classifier

    Raises:
        TrainingError: If the algorithm is unknown or fitting fails
    """
    try:
        algorithm = Algorithm(algorithm)
    except ValueError:
        raise TrainingError(f"unknown algorithm: {algorithm}")
    return MODEL_REGISTRY[algorithm](train, config or default_train_config(algorithm))


def model_from_dict(payload: Dict[str, Any]) -> ClassifierModel:
    """Rebuild a model from ``ClassifierModel.to_dict`` output."""
    algorithm = Algorithm(payload["algorithm"])
    config = TrainConfig(**payload["training_config"])
    params = payload["parameters"]
    if algorithm is Algorithm.MULTINOMIAL_NB:
        model: ClassifierModel = NaiveBayesModel.from_parameters(algorithm, config, params)
    elif algorithm in (Algorithm.DECISION_TREE, Algorithm.RANDOM_FOREST, Algorithm.GBDT):
        model = TreeEnsembleModel.from_parameters(algorithm, config, params, payload["feature_dimension"])
    else:
        model = LinearModel.from_parameters(algorithm, config, params)
    if model.feature_dimension != payload["feature_dimension"]:
        raise TrainingError(
            f"model file declares {payload['feature_dimension']} features, parameters hold {model.feature_dimension}"
        )
    return model


def save_model(model: ClassifierModel, path: PathLike) -> Path:
    """Persist a model as JSON (algorithm tag, dimension, config, parameters)."""
    return write_json(path, model.to_dict())


def load_model(path: PathLike) -> ClassifierModel:
    return model_from_dict(read_json(path))
