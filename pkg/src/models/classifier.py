"""
Classifier configuration models: algorithm names, SGD losses and training hyperparameters.
"""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field


class Algorithm(str, Enum):
    """Classifier algorithms the learn package can fit."""
    MULTINOMIAL_NB = "multinomial_nb"
    LOGISTIC_REGRESSION = "logistic_regression"
    PERCEPTRON = "perceptron"
    RIDGE = "ridge"
    LINEAR_SVC = "linear_svc"
    SGD_HINGE = "sgd_hinge"
    DECISION_TREE = "decision_tree"
    RANDOM_FOREST = "random_forest"
    GBDT = "gbdt"


class Loss(str, Enum):
    """Per-example losses for linear SGD, on labels y in {-1, +1} and score s."""
    HINGE = "hinge"                  # max(0, 1 - y*s)
    SQUARED_HINGE = "squared_hinge"  # max(0, 1 - y*s)^2
    LOGISTIC = "logistic"            # ln(1 + exp(-y*s))
    PERCEPTRON = "perceptron"        # max(0, -y*s)
    SQUARED = "squared"              # (y - s)^2


LINEAR_LOSSES = {
    Algorithm.LOGISTIC_REGRESSION: Loss.LOGISTIC,
    Algorithm.SGD_HINGE: Loss.HINGE,
    Algorithm.LINEAR_SVC: Loss.SQUARED_HINGE,
    Algorithm.PERCEPTRON: Loss.PERCEPTRON,
    Algorithm.RIDGE: Loss.SQUARED,
}

TREE_ALGORITHMS = frozenset({Algorithm.DECISION_TREE, Algorithm.RANDOM_FOREST, Algorithm.GBDT})


class TrainConfig(BaseModel):
    """Hyperparameters for every algorithm; each fitter reads the fields it needs."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    # Linear models
    epochs: int = Field(10, ge=1, description="Passes over the training data")
    learning_rate: float = Field(0.1, gt=0, description="Initial step size, decays as 1/sqrt(t)")
    l2_lambda: float = Field(1e-4, ge=0, description="L2 penalty (ignored by the perceptron loss)")
    fit_intercept: bool = Field(True, description="Learn a bias term")
    seed: int = Field(0, description="Seed for shuffling, bootstrap and feature sampling")

    # Naive Bayes
    alpha: float = Field(1.0, gt=0, description="Additive smoothing")

    # Trees
    max_depth: int = Field(12, ge=1)
    min_leaf: int = Field(1, ge=1, description="Minimum training rows per leaf")
    n_trees: int = Field(100, ge=1)
    bootstrap: bool = Field(True)
    feature_subsample: Optional[int] = Field(
        None, ge=1, description="Features tried per split; None = sqrt(d) for forests, d otherwise"
    )

    # Boosting
    n_rounds: int = Field(100, ge=0)
    shrinkage: float = Field(0.1, gt=0, le=1)
    n_bins: int = Field(256, ge=2, le=65536)
    leaf_l2: float = Field(1.0, ge=0, description="L2 penalty on Newton leaf values")

    n_jobs: int = Field(1, ge=1, description="Threads for tree construction")


def default_train_config(algorithm: Algorithm, seed: int = 0, **overrides) -> TrainConfig:
    """Defaults per algorithm, with keyword overrides applied on top."""
    algorithm = Algorithm(algorithm)
    values = {"seed": seed}
    if algorithm is Algorithm.PERCEPTRON:
        values["l2_lambda"] = 0.0
    elif algorithm is Algorithm.GBDT:
        values["max_depth"] = 6
    values.update(overrides)
    return TrainConfig(**values)
