"""
Linear classifiers trained by stochastic gradient descent.

Logistic regression, the perceptron, the ridge classifier, the hinge-loss
SGD classifier and the linear SVC share one trainer and differ only in the
per-example loss. Labels are mapped to y in {-1, +1}; the trainer minimizes

    (1/n) * sum(loss(y_i, w.x_i + b)) + l2_lambda * |w|^2 / 2

with step size learning_rate / sqrt(t). Sparse rows only touch their
non-zero coordinates: the weight vector is kept as ``scale * v`` so the L2
shrink is a scalar update.
"""

import math
from typing import Any, Dict, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from loguru import logger

from ..models.classifier import LINEAR_LOSSES, Algorithm, Loss, TrainConfig, default_train_config
from ..models.features import LabeledMatrix, Matrix
from .base import ClassifierModel, FeatureInput, as_rows, check_training_set

_MIN_SCALE = 1e-9


class LinearModel(ClassifierModel):
    """Weight vector plus bias; score = w.x + b."""

    def __init__(
        self,
        algorithm: Algorithm,
        weights: np.ndarray,
        bias: float,
        training_config: TrainConfig,
        loss: Loss,
    ):
        super().__init__(algorithm, len(weights), training_config)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = float(bias)
        self.loss = Loss(loss)

    def decision_function(self, x: FeatureInput) -> np.ndarray:
        rows = as_rows(x, self.feature_dimension)
        return np.asarray(rows @ self.weights).ravel() + self.bias

    def parameters(self) -> Dict[str, Any]:
        return {"loss": self.loss.value, "weights": self.weights.tolist(), "bias": self.bias}

    @classmethod
    def from_parameters(cls, algorithm: Algorithm, config: TrainConfig, params: Dict[str, Any]) -> "LinearModel":
        return cls(algorithm, np.array(params["weights"], dtype=np.float64), params["bias"], config, params["loss"])


def _signed(labels: np.ndarray) -> np.ndarray:
    return np.where(labels > 0, 1.0, -1.0)


def loss_value(loss: Loss, y: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Per-example loss for labels in {-1, +1} and scores s."""
    margin = y * s
    if loss is Loss.HINGE:
        return np.maximum(0.0, 1.0 - margin)
    if loss is Loss.SQUARED_HINGE:
        return np.maximum(0.0, 1.0 - margin) ** 2
    if loss is Loss.LOGISTIC:
        return np.logaddexp(0.0, -margin)
    if loss is Loss.PERCEPTRON:
        return np.maximum(0.0, -margin)
    if loss is Loss.SQUARED:
        return (y - s) ** 2
    raise ValueError(f"unknown loss {loss}")


def loss_derivative(loss: Loss, y: np.ndarray, s: np.ndarray) -> np.ndarray:
    """d loss / d s (a subgradient at the kinks)."""
    margin = y * s
    if loss is Loss.HINGE:
        return np.where(margin < 1.0, -y, 0.0)
    if loss is Loss.SQUARED_HINGE:
        return np.where(margin < 1.0, -2.0 * y * (1.0 - margin), 0.0)
    if loss is Loss.LOGISTIC:
        # -y * sigmoid(-margin)
        return -y * np.exp(-np.logaddexp(0.0, margin))
    if loss is Loss.PERCEPTRON:
        return np.where(margin <= 0.0, -y, 0.0)
    if loss is Loss.SQUARED:
        return -2.0 * (y - s)
    raise ValueError(f"unknown loss {loss}")


def _regularized(loss: Loss, l2_lambda: float) -> float:
    return 0.0 if loss is Loss.PERCEPTRON else l2_lambda


def objective(
    weights: np.ndarray, bias: float, x: Matrix, labels: np.ndarray, loss: Loss, l2_lambda: float
) -> float:
    """Mean training loss plus the L2 penalty."""
    y = _signed(labels)
    s = np.asarray(x @ weights).ravel() + bias
    lam = _regularized(loss, l2_lambda)
    return float(np.mean(loss_value(loss, y, s)) + 0.5 * lam * float(weights @ weights))


def objective_gradient(
    weights: np.ndarray, bias: float, x: Matrix, labels: np.ndarray, loss: Loss, l2_lambda: float
) -> Tuple[np.ndarray, float]:
    """Analytic gradient of ``objective`` with respect to (weights, bias)."""
    y = _signed(labels)
    s = np.asarray(x @ weights).ravel() + bias
    d = loss_derivative(loss, y, s) / len(y)
    grad_w = np.asarray(x.T @ d).ravel() + _regularized(loss, l2_lambda) * weights
    return grad_w, float(d.sum())


def _scalar_derivative(loss: Loss, y: float, s: float) -> float:
    margin = y * s
    if loss is Loss.HINGE:
        return -y if margin < 1.0 else 0.0
    if loss is Loss.SQUARED_HINGE:
        return -2.0 * y * (1.0 - margin) if margin < 1.0 else 0.0
    if loss is Loss.LOGISTIC:
        if margin >= 0:
            e = math.exp(-margin)
            return -y * e / (1.0 + e)
        return -y / (1.0 + math.exp(margin))
    if loss is Loss.PERCEPTRON:
        return -y if margin <= 0.0 else 0.0
    return -2.0 * (y - s)


def _row(rows: Matrix, i: int) -> Tuple[Optional[np.ndarray], np.ndarray]:
    if sp.issparse(rows):
        start, stop = rows.indptr[i], rows.indptr[i + 1]
        return rows.indices[start:stop], rows.data[start:stop]
    return None, rows[i]


def fit_linear_sgd(
    train: LabeledMatrix,
    config: Optional[TrainConfig] = None,
    loss: Loss = Loss.HINGE,
    algorithm: Optional[Algorithm] = None,
) -> LinearModel:
    """
    Fit a linear classifier by SGD with per-epoch shuffling.

    Args:
        train: Training rows (dense or CSR) and 0/1 labels
        config: Epochs, learning rate, L2 penalty, intercept and seed
        loss: Per-example loss; the perceptron loss is never regularized
        algorithm: Algorithm tag stored on the model; derived from the loss when omitted

    Returns:
        Fitted LinearModel. Single-class training data gives a constant model
        that predicts that class everywhere.
    """
    loss = Loss(loss)
    if algorithm is None:
        algorithm = next(a for a, l in LINEAR_LOSSES.items() if l is loss)
    config = config or default_train_config(algorithm)
    check_training_set(train)

    rows = train.rows
    n, d = rows.shape
    y = _signed(train.labels)

    if np.all(y == y[0]):
        logger.warning(f"{algorithm.value}: single-class training data, fitting a constant model")
        return LinearModel(algorithm, np.zeros(d), float(y[0]), config, loss)

    lam = _regularized(loss, config.l2_lambda)
    intercept = 1.0 if config.fit_intercept else 0.0
    v = np.zeros(d, dtype=np.float64)
    scale = 1.0
    bias = 0.0
    rng = np.random.default_rng(config.seed)
    sq_norms = None
    if loss is Loss.SQUARED:
        sq_norms = (
            np.asarray(rows.multiply(rows).sum(axis=1)).ravel() if sp.issparse(rows) else np.einsum("ij,ij->i", rows, rows)
        )

    t = 0
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for i in order:
            t += 1
            eta = config.learning_rate / np.sqrt(t)
            idx, vals = _row(rows, i)
            dot = float(v[idx] @ vals) if idx is not None else float(v @ vals)
            s = scale * dot + bias

            if lam > 0.0:
                scale *= max(1.0 - eta * lam, 0.0)
                if scale < _MIN_SCALE:
                    v *= scale
                    scale = 1.0

            if loss is Loss.SQUARED:
                # implicit step: exact minimizer of the linearized proximal update
                step = eta * (y[i] - s) / (1.0 + eta * (sq_norms[i] + intercept))
            else:
                step = -eta * _scalar_derivative(loss, y[i], s)
            if step == 0.0:
                continue
            if idx is not None:
                v[idx] += (step / scale) * vals
            else:
                v += (step / scale) * vals
            if config.fit_intercept:
                bias += step

        logger.debug(f"{algorithm.value} epoch {epoch + 1}/{config.epochs} done")

    weights = v * scale
    model = LinearModel(algorithm, weights, bias, config, loss)
    logger.info(
        f"Fitted {algorithm.value} ({loss.value} loss) on {n} rows x {d} features: "
        f"training accuracy {model.training_accuracy(train):.4f}"
    )
    return model


def fit_logistic_regression(train: LabeledMatrix, config: Optional[TrainConfig] = None) -> LinearModel:
    return fit_linear_sgd(train, config, Loss.LOGISTIC, Algorithm.LOGISTIC_REGRESSION)


def fit_perceptron(train: LabeledMatrix, config: Optional[TrainConfig] = None) -> LinearModel:
    return fit_linear_sgd(train, config, Loss.PERCEPTRON, Algorithm.PERCEPTRON)


def fit_ridge(train: LabeledMatrix, config: Optional[TrainConfig] = None) -> LinearModel:
    return fit_linear_sgd(train, config, Loss.SQUARED, Algorithm.RIDGE)


def fit_sgd_hinge(train: LabeledMatrix, config: Optional[TrainConfig] = None) -> LinearModel:
    return fit_linear_sgd(train, config, Loss.HINGE, Algorithm.SGD_HINGE)


def fit_linear_svc(train: LabeledMatrix, config: Optional[TrainConfig] = None) -> LinearModel:
    return fit_linear_sgd(train, config, Loss.SQUARED_HINGE, Algorithm.LINEAR_SVC)
