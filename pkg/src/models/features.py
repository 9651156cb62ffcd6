"""
Feature models: n-gram vocabularies, sparse and dense vectors, word
embeddings, the condition label encoder and labeled training matrices.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp

from ..utils.constants import UNSEEN_CONDITION_CODE

Matrix = Union[np.ndarray, sp.csr_matrix]


@dataclass(frozen=True, eq=False)
class SparseVector:
    """Weighted sparse feature vector with strictly increasing indices and no stored zeros."""

    indices: np.ndarray
    weights: np.ndarray
    dimension: int

    def __post_init__(self):
        if self.indices.shape != self.weights.shape:
            raise ValueError("indices and weights must have the same length")
        if len(self.indices):
            if self.indices[0] < 0 or self.indices[-1] >= self.dimension:
                raise ValueError(f"index out of range for dimension {self.dimension}")
            if np.any(np.diff(self.indices) <= 0):
                raise ValueError("indices must be strictly increasing")
            if np.any(self.weights == 0):
                raise ValueError("zero weights must not be stored")

    @classmethod
    def from_mapping(cls, weights: Mapping[int, float], dimension: int) -> "SparseVector":
        """Build from an index -> weight mapping, dropping zeros."""
        items = sorted((int(i), float(w)) for i, w in weights.items() if w != 0)
        indices = np.array([i for i, _ in items], dtype=np.int64)
        values = np.array([w for _, w in items], dtype=np.float64)
        return cls(indices=indices, weights=values, dimension=dimension)

    @classmethod
    def empty(cls, dimension: int) -> "SparseVector":
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float64), dimension)

    def entries(self) -> List[Tuple[int, float]]:
        return [(int(i), float(w)) for i, w in zip(self.indices, self.weights)]

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dimension, dtype=np.float64)
        dense[self.indices] = self.weights
        return dense

    def __len__(self) -> int:
        return len(self.indices)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (
            self.dimension == other.dimension
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.weights, other.weights)
        )


def stack_sparse(vectors: Iterable[SparseVector], dimension: int) -> sp.csr_matrix:
    """Stack sparse vectors into a CSR matrix, one row per vector."""
    indptr = [0]
    indices: List[np.ndarray] = []
    data: List[np.ndarray] = []
    for vec in vectors:
        indices.append(vec.indices)
        data.append(vec.weights)
        indptr.append(indptr[-1] + len(vec))
    n_rows = len(indptr) - 1
    if not indices:
        return sp.csr_matrix((n_rows, dimension), dtype=np.float64)
    return sp.csr_matrix(
        (np.concatenate(data), np.concatenate(indices), np.array(indptr, dtype=np.int64)),
        shape=(n_rows, dimension),
    )


@dataclass
class Vocabulary:
    """
    N-gram index with document frequencies.

    ``grams`` is in index order (lexicographic), ``document_frequency`` is
    aligned with it and ``n_documents`` is the number of training documents.
    """

    grams: List[str]
    document_frequency: np.ndarray
    ngram_range: Tuple[int, int]
    n_documents: int
    min_df: int = 1
    index: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        low, high = self.ngram_range
        if not 1 <= low <= high:
            raise ValueError(f"invalid ngram range {self.ngram_range}")
        if len(self.grams) != len(self.document_frequency):
            raise ValueError("grams and document frequencies must align")
        self.document_frequency = np.asarray(self.document_frequency, dtype=np.int64)
        self.index = {gram: i for i, gram in enumerate(self.grams)}

    def __len__(self) -> int:
        return len(self.grams)

    def __contains__(self, gram: object) -> bool:
        return gram in self.index

    def df(self, gram: str) -> int:
        return int(self.document_frequency[self.index[gram]])


@dataclass
class TfIdfModel:
    """Vocabulary plus one inverse document frequency per gram."""

    vocabulary: Vocabulary
    idf_weights: np.ndarray

    def __post_init__(self):
        self.idf_weights = np.asarray(self.idf_weights, dtype=np.float64)
        if len(self.idf_weights) != len(self.vocabulary):
            raise ValueError("idf weights must align with the vocabulary")


@dataclass
class EmbeddingTable:
    """Trained word vectors, one row of ``vectors`` per token."""

    tokens: List[str]
    vectors: np.ndarray
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    seed: int = 0
    loss_history: List[float] = field(default_factory=list)
    index: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.tokens):
            raise ValueError("vectors must be a (tokens x dimension) matrix")
        self.index = {token: i for i, token in enumerate(self.tokens)}

    @property
    def dimension(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: object) -> bool:
        return token in self.index

    def __getitem__(self, token: str) -> np.ndarray:
        return self.vectors[self.index[token]]

    def as_dict(self) -> Dict[str, np.ndarray]:
        return {token: self.vectors[i] for i, token in enumerate(self.tokens)}


@dataclass
class ConditionEncoder:
    """Condition -> integer code, fitted on training conditions in lexicographic order."""

    mapping: Dict[str, int] = field(default_factory=dict)

    @classmethod
    def fit(cls, conditions: Iterable[Optional[str]]) -> "ConditionEncoder":
        seen = sorted({c for c in conditions if c is not None})
        return cls(mapping={c: i for i, c in enumerate(seen)})

    def encode(self, condition: Optional[str]) -> int:
        if condition is None:
            return UNSEEN_CONDITION_CODE
        return self.mapping.get(condition, UNSEEN_CONDITION_CODE)

    def __len__(self) -> int:
        return len(self.mapping)


@dataclass
class LabeledMatrix:
    """
    Feature rows (dense array or CSR matrix) with aligned labels
    (1 = positive, 0 = negative) and a per-row synthetic flag.
    """

    rows: Matrix
    labels: np.ndarray
    synthetic: Optional[np.ndarray] = None

    def __post_init__(self):
        if sp.issparse(self.rows):
            self.rows = sp.csr_matrix(self.rows)
        else:
            rows = np.asarray(self.rows, dtype=np.float64)
            if rows.ndim == 1:
                # a flat vector is one row; an empty one is no rows
                rows = rows.reshape(0, 0) if rows.size == 0 else rows[None, :]
            self.rows = rows
        self.labels = np.asarray(self.labels, dtype=np.int8)
        if self.synthetic is None:
            self.synthetic = np.zeros(len(self.labels), dtype=bool)
        self.synthetic = np.asarray(self.synthetic, dtype=bool)
        if self.rows.shape[0] != len(self.labels) or len(self.synthetic) != len(self.labels):
            raise ValueError(
                f"rows ({self.rows.shape[0]}), labels ({len(self.labels)}) and "
                f"synthetic flags ({len(self.synthetic)}) must align"
            )

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.rows)

    @property
    def n_rows(self) -> int:
        return int(self.rows.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.rows.shape[1])

    def class_counts(self) -> Dict[int, int]:
        positives = int(self.labels.sum())
        return {1: positives, 0: self.n_rows - positives}
