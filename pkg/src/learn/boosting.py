"""
Histogram gradient-boosted trees for binary logistic loss.

Features are bucketed once into at most ``n_bins`` quantile bins. Each round
fits a depth-limited regression tree to the gradients and Hessians of the
logistic loss at the current scores, using per-bin sums to evaluate every
cut, and takes Newton leaf values ``-G / (H + leaf_l2)``.
"""

from typing import List, Optional, Tuple

import numpy as np
from loguru import logger

from ..models.classifier import Algorithm, TrainConfig, default_train_config
from ..models.features import LabeledMatrix
from .trees import Tree, TreeBuilder, TreeEnsembleModel, dense_training_rows

_TIE_TOLERANCE = 1e-12
_PROB_CLIP = 1e-12


def quantile_cuts(column: np.ndarray, n_bins: int) -> np.ndarray:
    """
    Ascending cut values for one feature; a value goes to bin ``j`` when it is
    above ``cuts[j-1]`` and at most ``cuts[j]``.

    Columns with at most ``n_bins`` distinct values cut halfway between
    neighbours; wider columns cut at quantiles.
    """
    uniq = np.unique(column)
    if len(uniq) <= 1:
        return np.zeros(0, dtype=np.float64)
    if len(uniq) <= n_bins:
        cuts = 0.5 * (uniq[:-1] + uniq[1:])
        # adjacent floats can round the midpoint onto the upper value
        return np.where(cuts < uniq[1:], cuts, uniq[:-1])
    qs = np.quantile(column, np.linspace(0.0, 1.0, n_bins + 1)[1:-1])
    cuts = np.unique(qs)
    return cuts[cuts < uniq[-1]]


def bin_features(x: np.ndarray, n_bins: int) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Bin index of every value (shape of ``x``) and the cut values per feature."""
    cuts = [quantile_cuts(x[:, f], n_bins) for f in range(x.shape[1])]
    bins = np.empty(x.shape, dtype=np.int32)
    for f, c in enumerate(cuts):
        bins[:, f] = np.searchsorted(c, x[:, f], side="left")
    return bins, cuts


def _logistic_loss(y: np.ndarray, scores: np.ndarray) -> float:
    # y in {0, 1}
    return float(np.mean(np.logaddexp(0.0, scores) - y * scores))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _grow_histogram_tree(
    bins: np.ndarray,
    cuts: List[np.ndarray],
    g: np.ndarray,
    h: np.ndarray,
    features: List[int],
    config: TrainConfig,
) -> Tree:
    lam = config.leaf_l2
    builder = TreeBuilder()

    def grow(rows: np.ndarray, depth: int) -> int:
        G = float(g[rows].sum())
        H = float(h[rows].sum())
        value = -G / (H + lam) if H + lam > 0 else 0.0
        if depth >= config.max_depth or len(rows) < 2 * config.min_leaf:
            return builder.add_leaf(value)

        parent = G * G / (H + lam) if H + lam > 0 else 0.0
        best: Optional[Tuple[int, int, float]] = None
        for f in features:
            n_cuts = len(cuts[f])
            if n_cuts == 0:
                continue
            b = bins[rows, f]
            g_hist = np.bincount(b, weights=g[rows], minlength=n_cuts + 1)
            h_hist = np.bincount(b, weights=h[rows], minlength=n_cuts + 1)
            c_hist = np.bincount(b, minlength=n_cuts + 1)
            gl = np.cumsum(g_hist)[:-1]
            hl = np.cumsum(h_hist)[:-1]
            cl = np.cumsum(c_hist)[:-1]
            gr, hr, cr = G - gl, H - hl, len(rows) - cl
            valid = (cl >= config.min_leaf) & (cr >= config.min_leaf)
            if not valid.any():
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent)
            gain = np.where(valid & np.isfinite(gain), gain, -np.inf)
            top = float(gain.max())
            if not np.isfinite(top):
                continue
            j = int(np.flatnonzero(gain >= top - _TIE_TOLERANCE)[0])
            if best is None or top > best[2] + _TIE_TOLERANCE:
                best = (f, j, top)

        if best is None or best[2] < -_TIE_TOLERANCE:
            return builder.add_leaf(value)
        f, j, _ = best
        node = builder.add_split(f, cuts[f][j], value)
        go_left = bins[rows, f] <= j
        left = grow(rows[go_left], depth + 1)
        right = grow(rows[~go_left], depth + 1)
        builder.link(node, left, right)
        return node

    grow(np.arange(bins.shape[0]), 0)
    return builder.build()


def fit_gbdt(train: LabeledMatrix, config: Optional[TrainConfig] = None) -> TreeEnsembleModel:
    """
    Fit boosted regression trees on logistic-loss gradients.

    The score starts at the log-odds of the training positive rate and each
    round adds ``shrinkage`` times the new tree. With zero rounds the model
    is that constant. Training loss is recorded before the first round and
    after every round.
    """
    config = config or default_train_config(Algorithm.GBDT)
    x = dense_training_rows(train)
    y = train.labels.astype(np.float64)
    n, d = x.shape

    rate = float(np.clip(y.mean(), _PROB_CLIP, 1.0 - _PROB_CLIP))
    base = float(np.log(rate / (1.0 - rate)))
    bins, cuts = bin_features(x, config.n_bins)
    rng = np.random.default_rng(config.seed)

    scores = np.full(n, base)
    history = [_logistic_loss(y, scores)]
    trees: List[Tree] = []
    for round_ in range(config.n_rounds):
        p = _sigmoid(scores)
        g = p - y
        h = p * (1.0 - p)
        if config.feature_subsample is not None and config.feature_subsample < d:
            features = np.sort(rng.choice(d, size=config.feature_subsample, replace=False)).tolist()
        else:
            features = list(range(d))
        tree = _grow_histogram_tree(bins, cuts, g, h, features, config)
        trees.append(tree)
        scores = scores + config.shrinkage * tree.predict(x)
        history.append(_logistic_loss(y, scores))
        logger.debug(f"gbdt round {round_ + 1}/{config.n_rounds}: loss {history[-1]:.6f}, {tree.n_leaves} leaves")

    model = TreeEnsembleModel(
        Algorithm.GBDT, d, trees, config, base_score=base, scale=config.shrinkage, loss_history=history
    )
    logger.info(
        f"Fitted gbdt on {n} rows x {d} features: {len(trees)} rounds, "
        f"final loss {history[-1]:.6f}, training accuracy {model.training_accuracy(train):.4f}"
    )
    return model
