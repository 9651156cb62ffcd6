"""
CART decision trees and random forests on dense features.

Trees are stored as flat node arrays. An internal node sends a row left when
``x[feature] <= threshold``; a leaf stores its value (for classification
trees, the positive fraction minus 0.5). An ensemble scores a row as
``base_score + scale * sum(tree values)``, which covers a single tree, the
forest mean and the boosted sum.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
from loguru import logger

from ..models.classifier import Algorithm, TrainConfig, default_train_config
from ..models.features import LabeledMatrix
from ..utils.exceptions import TrainingError
from .base import ClassifierModel, FeatureInput, check_training_set, dense_rows

_TIE_TOLERANCE = 1e-12


@dataclass
class Tree:
    """Flat binary tree; ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row."""
        node = np.zeros(x.shape[0], dtype=np.int64)
        rows = np.arange(x.shape[0])
        while True:
            feat = self.feature[node]
            internal = feat >= 0
            if not internal.any():
                return node
            r = rows[internal]
            n = node[internal]
            go_left = x[r, feat[internal]] <= self.threshold[n]
            node[internal] = np.where(go_left, self.left[n], self.right[n])

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.value[self.apply(x)]

    def to_dict(self) -> Dict[str, List]:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, List]) -> "Tree":
        return cls(
            feature=np.array(data["feature"], dtype=np.int64),
            threshold=np.array(data["threshold"], dtype=np.float64),
            left=np.array(data["left"], dtype=np.int64),
            right=np.array(data["right"], dtype=np.int64),
            value=np.array(data["value"], dtype=np.float64),
        )


class TreeBuilder:
    """Accumulates nodes in preorder and freezes them into a Tree."""

    def __init__(self):
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.value: List[float] = []

    def add_leaf(self, value: float) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        return len(self.feature) - 1

    def add_split(self, feature: int, threshold: float, value: float) -> int:
        node = self.add_leaf(value)
        self.feature[node] = int(feature)
        self.threshold[node] = float(threshold)
        return node

    def link(self, node: int, left: int, right: int) -> None:
        self.left[node] = left
        self.right[node] = right

    def build(self) -> Tree:
        return Tree(
            feature=np.array(self.feature, dtype=np.int64),
            threshold=np.array(self.threshold, dtype=np.float64),
            left=np.array(self.left, dtype=np.int64),
            right=np.array(self.right, dtype=np.int64),
            value=np.array(self.value, dtype=np.float64),
        )


class TreeEnsembleModel(ClassifierModel):
    """Decision tree, random forest or boosted trees."""

    def __init__(
        self,
        algorithm: Algorithm,
        feature_dimension: int,
        trees: Sequence[Tree],
        training_config: TrainConfig,
        base_score: float = 0.0,
        scale: float = 1.0,
        loss_history: Optional[List[float]] = None,
    ):
        super().__init__(algorithm, feature_dimension, training_config)
        self.trees = list(trees)
        self.base_score = float(base_score)
        self.scale = float(scale)
        self.loss_history = list(loss_history or [])

    def decision_function(self, x: FeatureInput) -> np.ndarray:
        rows = dense_rows(x, self.feature_dimension)
        total = np.zeros(rows.shape[0], dtype=np.float64)
        for tree in self.trees:
            total += tree.predict(rows)
        return self.base_score + self.scale * total

    def parameters(self) -> Dict[str, Any]:
        return {
            "base_score": self.base_score,
            "scale": self.scale,
            "trees": [tree.to_dict() for tree in self.trees],
            "loss_history": self.loss_history,
        }

    @classmethod
    def from_parameters(cls, algorithm: Algorithm, config: TrainConfig, params: Dict[str, Any], feature_dimension: int) -> "TreeEnsembleModel":
        return cls(
            algorithm,
            feature_dimension,
            [Tree.from_dict(t) for t in params["trees"]],
            config,
            base_score=params["base_score"],
            scale=params["scale"],
            loss_history=params.get("loss_history"),
        )


def dense_training_rows(train: LabeledMatrix) -> np.ndarray:
    check_training_set(train)
    if sp.issparse(train.rows):
        raise TrainingError("tree learners need dense features")
    return np.asarray(train.rows, dtype=np.float64)


def _best_gini_split(
    x: np.ndarray, y: np.ndarray, idx: np.ndarray, features: Sequence[int], min_leaf: int
) -> Optional[Tuple[int, float, float]]:
    """(feature, threshold, impurity reduction) of the best split, or None when no split is valid."""
    n = len(idx)
    ys = y[idx]
    positives = float(ys.sum())
    p = positives / n
    parent = 2.0 * p * (1.0 - p)

    left_n = np.arange(1, n, dtype=np.float64)
    right_n = n - left_n
    size_ok = (left_n >= min_leaf) & (right_n >= min_leaf)

    best: Optional[Tuple[int, float, float]] = None
    for f in features:
        vals = x[idx, f]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        valid = size_ok & (sv[:-1] < sv[1:])
        if not valid.any():
            continue
        left_pos = np.cumsum(ys[order], dtype=np.float64)[:-1]
        right_pos = positives - left_pos
        pl = left_pos / left_n
        pr = right_pos / right_n
        weighted = (left_n * 2.0 * pl * (1.0 - pl) + right_n * 2.0 * pr * (1.0 - pr)) / n
        gain = np.where(valid, parent - weighted, -np.inf)
        top = gain.max()
        # lowest threshold among (near-)equal gains
        j = int(np.flatnonzero(gain >= top - _TIE_TOLERANCE)[0])
        if best is None or top > best[2] + _TIE_TOLERANCE:
            threshold = 0.5 * (sv[j] + sv[j + 1])
            if not sv[j] <= threshold < sv[j + 1]:
                threshold = sv[j]
            best = (int(f), float(threshold), float(top))
    return best


FeatureSampler = Callable[[], Tuple[List[int], List[int]]]


def _all_features(d: int) -> FeatureSampler:
    features = list(range(d))
    return lambda: (features, [])


def _random_features(d: int, m: int, rng: np.random.Generator) -> FeatureSampler:
    def sample() -> Tuple[List[int], List[int]]:
        chosen = np.sort(rng.choice(d, size=m, replace=False))
        rest = np.setdiff1d(np.arange(d), chosen)
        return chosen.tolist(), rest.tolist()

    return sample


def grow_cart(
    x: np.ndarray,
    y: np.ndarray,
    idx: np.ndarray,
    max_depth: int,
    min_leaf: int,
    sampler: FeatureSampler,
) -> Tree:
    """
    Grow a Gini classification tree on the rows ``idx`` (repeats allowed).

    Splits with zero impurity reduction are taken as long as the node is
    impure, so patterns like XOR that need two levels are still found.
    When none of the sampled features can split a node, the remaining
    features are tried before giving up.
    """
    builder = TreeBuilder()

    def grow(rows: np.ndarray, depth: int) -> int:
        n = len(rows)
        positives = int(y[rows].sum())
        value = positives / n - 0.5
        if depth >= max_depth or positives in (0, n) or n < 2 * min_leaf:
            return builder.add_leaf(value)
        sampled, rest = sampler()
        split = _best_gini_split(x, y, rows, sampled, min_leaf)
        if split is None and rest:
            split = _best_gini_split(x, y, rows, rest, min_leaf)
        if split is None:
            return builder.add_leaf(value)
        feature, threshold, _ = split
        node = builder.add_split(feature, threshold, value)
        go_left = x[rows, feature] <= threshold
        left = grow(rows[go_left], depth + 1)
        right = grow(rows[~go_left], depth + 1)
        builder.link(node, left, right)
        return node

    grow(np.asarray(idx, dtype=np.int64), 0)
    return builder.build()


def fit_decision_tree(train: LabeledMatrix, config: Optional[TrainConfig] = None) -> TreeEnsembleModel:
    """
    Fit one CART tree grown greedily by Gini impurity reduction.

    Ties between splits go to the lower feature index, then the lower
    threshold. Growth stops at ``max_depth``, at ``min_leaf`` or at a pure node.
    """
    config = config or default_train_config(Algorithm.DECISION_TREE)
    x = dense_training_rows(train)
    n, d = x.shape
    if config.feature_subsample is not None and config.feature_subsample < d:
        sampler = _random_features(d, config.feature_subsample, np.random.default_rng(config.seed))
    else:
        sampler = _all_features(d)
    tree = grow_cart(x, train.labels.astype(np.int64), np.arange(n), config.max_depth, config.min_leaf, sampler)
    model = TreeEnsembleModel(Algorithm.DECISION_TREE, d, [tree], config)
    logger.info(
        f"Fitted decision_tree on {n} rows x {d} features: {tree.n_leaves} leaves, "
        f"training accuracy {model.training_accuracy(train):.4f}"
    )
    return model


def forest_subsample(config: TrainConfig, d: int) -> int:
    if config.feature_subsample is not None:
        return min(config.feature_subsample, d)
    return max(1, int(math.sqrt(d)))


def fit_random_forest(train: LabeledMatrix, config: Optional[TrainConfig] = None) -> TreeEnsembleModel:
    """
    Fit ``n_trees`` CART trees on bootstrap samples with per-split feature sampling.

    Each tree draws from its own stream spawned from the seed, so the forest
    is the same whether trees are built sequentially or on ``n_jobs`` threads.
    The decision score is the mean of the tree scores.
    """
    config = config or default_train_config(Algorithm.RANDOM_FOREST)
    x = dense_training_rows(train)
    y = train.labels.astype(np.int64)
    n, d = x.shape
    m = forest_subsample(config, d)
    streams = np.random.SeedSequence(config.seed).spawn(config.n_trees)

    def build(stream: np.random.SeedSequence) -> Tree:
        rng = np.random.default_rng(stream)
        idx = rng.integers(0, n, size=n) if config.bootstrap else np.arange(n)
        sampler = _random_features(d, m, rng) if m < d else _all_features(d)
        return grow_cart(x, y, idx, config.max_depth, config.min_leaf, sampler)

    if config.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=config.n_jobs) as executor:
            trees = list(executor.map(build, streams))
    else:
        trees = [build(s) for s in streams]

    model = TreeEnsembleModel(Algorithm.RANDOM_FOREST, d, trees, config, scale=1.0 / len(trees))
    logger.info(
        f"Fitted random_forest on {n} rows x {d} features: {len(trees)} trees, "
        f"{m} features per split, training accuracy {model.training_accuracy(train):.4f}"
    )
    return model
