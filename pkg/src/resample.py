"""
SMOTE oversampling of the minority sentiment class.

Synthetic rows interpolate between a minority row and one of its k nearest
minority neighbours. Parents cycle over the minority rows in order; the
interpolation weights and neighbour picks are drawn up front from one seeded
stream, so chunked or threaded neighbour search gives the same output as a
sequential run.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from loguru import logger

from .models.features import LabeledMatrix, Matrix
from .models.pipeline import SmoteConfig
from .utils.exceptions import ResamplingError

_CHUNK_ROWS = 256
# candidate slack for the expanded-norm distances, relative to the squared norms involved
_DIST_SLACK = 1e-9


def smote_target(minority: int, majority: int, ratio: float) -> int:
    """Minority count SMOTE aims for: floor(ratio * majority), using the decimal value of ratio."""
    return math.floor(Fraction(repr(float(ratio))) * majority)


def _exact_distances(rows: Matrix, query: int, candidates: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances from row ``query`` to each candidate row, by direct differences."""
    if sp.issparse(rows):
        diff = rows[candidates] - rows[np.full(len(candidates), query)]
        return np.asarray(diff.multiply(diff).sum(axis=1)).ravel()
    diff = rows[candidates] - rows[query]
    return (diff * diff).sum(axis=1)


def _as_search_rows(minority_rows: Matrix) -> Matrix:
    if sp.issparse(minority_rows):
        return sp.csr_matrix(minority_rows, dtype=np.float64)
    return np.asarray(minority_rows, dtype=np.float64)


def knn_minority(query: int, minority_rows: Matrix, k: int) -> np.ndarray:
    """
    Indices of the k minority rows nearest to row ``query`` by Euclidean distance.

    The query row itself is excluded; equal distances go to the lower index.

    Raises:
        ResamplingError: If k is not smaller than the number of minority rows
    """
    n = minority_rows.shape[0]
    if k < 1 or k >= n:
        raise ResamplingError(f"k={k} needs more than k minority rows, got {n}")
    index = np.arange(n)
    dist = _exact_distances(_as_search_rows(minority_rows), query, index)
    dist[query] = np.inf
    order = np.lexsort((index, dist))
    return order[:k]


def _squared_norms(rows: Matrix) -> np.ndarray:
    if sp.issparse(rows):
        return np.asarray(rows.multiply(rows).sum(axis=1)).ravel()
    return np.einsum("ij,ij->i", rows, rows)


def _knn_chunk(rows: Matrix, norms: np.ndarray, start: int, stop: int, k: int) -> np.ndarray:
    block = rows[start:stop]
    if sp.issparse(rows):
        dots = np.asarray((block @ rows.T).todense())
    else:
        dots = block @ rows.T
    dist = norms[start:stop, None] + norms[None, :] - 2.0 * dots
    np.maximum(dist, 0.0, out=dist)
    dist[np.arange(stop - start), np.arange(start, stop)] = np.inf

    # the expanded form only shortlists; the shortlist is ranked on exact distances
    kth = np.partition(dist, k - 1, axis=1)[:, k - 1]
    slack = _DIST_SLACK * (norms[start:stop] + norms.max())
    out = np.empty((stop - start, k), dtype=np.int64)
    for i in range(stop - start):
        query = start + i
        candidates = np.flatnonzero(dist[i] <= kth[i] + slack[i])
        candidates = candidates[candidates != query]
        exact = _exact_distances(rows, query, candidates)
        out[i] = candidates[np.lexsort((candidates, exact))[:k]]
    return out


def knn_all(minority_rows: Matrix, k: int, max_workers: int = 1) -> np.ndarray:
    """
    k nearest minority neighbours for every minority row, shape (m, k).

    Row chunks shortlist neighbours with ``|a|^2 + |b|^2 - 2ab`` and rank the
    shortlist on exact distances, so every row matches ``knn_minority``.
    Chunks may run on threads without changing the result.
    """
    n = minority_rows.shape[0]
    if k < 1 or k >= n:
        raise ResamplingError(f"k={k} needs more than k minority rows, got {n}")
    rows = _as_search_rows(minority_rows)
    norms = _squared_norms(rows)
    bounds = [(s, min(s + _CHUNK_ROWS, n)) for s in range(0, n, _CHUNK_ROWS)]
    if max_workers <= 1 or len(bounds) == 1:
        parts = [_knn_chunk(rows, norms, s, e, k) for s, e in bounds]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            parts = list(executor.map(lambda b: _knn_chunk(rows, norms, b[0], b[1], k), bounds))
    return np.vstack(parts)


def interpolate(a: Matrix, b: Matrix, lam: np.ndarray) -> Matrix:
    """
    Rows ``a + lam * (b - a)``, clamped to the segment between a and b.

    Args:
        a: Parent rows
        b: Neighbour rows, same shape as ``a``
        lam: One weight in [0, 1] per row
    """
    lam = np.asarray(lam, dtype=np.float64)
    if sp.issparse(a):
        a = sp.csr_matrix(a)
        b = sp.csr_matrix(b)
        out = a + sp.diags(lam) @ (b - a)
        out = sp.csr_matrix(out.maximum(a.minimum(b)).minimum(a.maximum(b)))
        out.eliminate_zeros()
        return out
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = a + lam[:, None] * (b - a)
    return np.clip(out, np.minimum(a, b), np.maximum(a, b))


def smote(
    train: LabeledMatrix,
    config: Optional[SmoteConfig] = None,
    coarse_columns: Optional[Sequence[int]] = None,
    max_workers: int = 1,
) -> LabeledMatrix:
    """
    Oversample the minority class until it reaches floor(target_ratio * majority).

    Original rows come first, bitwise unchanged and in order; synthetic rows
    follow and are flagged. Input already at or above the target comes back
    unchanged.

    Args:
        train: Training rows and labels
        config: k, target ratio and seed
        coarse_columns: When given, neighbour search only looks at these columns
            (used for wide sparse matrices); interpolation still uses all columns
        max_workers: Threads for the neighbour search

    Raises:
        ResamplingError: On single-class input or too few minority rows
    """
    config = config or SmoteConfig()
    counts = train.class_counts()
    if min(counts.values()) == 0:
        raise ResamplingError("SMOTE needs both classes in the training data")

    minority_label = 0 if counts[0] < counts[1] else 1
    minority_count = counts[minority_label]
    majority_count = counts[1 - minority_label]
    target = smote_target(minority_count, majority_count, config.target_ratio)
    if minority_count >= target:
        logger.info(
            f"SMOTE skipped: minority {minority_count} already at or above target {target}"
        )
        return train

    minority_idx = np.flatnonzero(train.labels == minority_label)
    if minority_count <= config.k_neighbors:
        raise ResamplingError(
            f"minority class has {minority_count} rows, needs more than k={config.k_neighbors}"
        )

    minority_rows = train.rows[minority_idx]
    search_rows = minority_rows
    if coarse_columns is not None:
        search_rows = minority_rows[:, np.asarray(coarse_columns, dtype=np.int64)]
    neighbours = knn_all(search_rows, config.k_neighbors, max_workers=max_workers)

    n_new = target - minority_count
    rng = np.random.default_rng(config.seed)
    lam = rng.random(n_new)
    picks = rng.integers(0, config.k_neighbors, size=n_new)
    parents = np.arange(n_new) % minority_count
    partners = neighbours[parents, picks]

    synthetic_rows = interpolate(minority_rows[parents], minority_rows[partners], lam)
    if train.is_sparse:
        rows: Matrix = sp.vstack([train.rows, synthetic_rows], format="csr")
    else:
        rows = np.vstack([train.rows, synthetic_rows])
    labels = np.concatenate([train.labels, np.full(n_new, minority_label, dtype=np.int8)])
    synthetic = np.concatenate([train.synthetic, np.ones(n_new, dtype=bool)])

    logger.info(
        f"SMOTE: created {n_new} synthetic rows for class {minority_label} "
        f"({minority_count} -> {target}, majority {majority_count}, k={config.k_neighbors})"
    )
    return LabeledMatrix(rows=rows, labels=labels, synthetic=synthetic)


def class_distribution(labels: np.ndarray) -> List[int]:
    """[positive, negative] counts of a label vector."""
    positives = int(np.sum(labels == 1))
    return [positives, int(len(labels) - positives)]
