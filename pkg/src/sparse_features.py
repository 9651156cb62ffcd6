"""
Bag-of-words and TF-IDF vectorization over n-gram vocabularies.

Term frequency is ``ln(1 + count)``, inverse document frequency is
``ln(N / df)`` with N the number of training documents. There is no idf
smoothing and no row normalization; grams outside the vocabulary are
ignored at transform time.
"""

import math
from collections import Counter
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from loguru import logger

from .models.features import SparseVector, TfIdfModel, Vocabulary
from .models.review import ProcessedDoc
from .utils.constants import DEFAULT_MIN_DF, DEFAULT_NGRAM_RANGE, NGRAM_SEPARATOR
from .utils.exceptions import EmptyCorpusError, VocabularyError
from .utils.io import PathLike, atomic_write, read_json, write_json

Doc = Union[ProcessedDoc, Sequence[str]]


def _tokens(doc: Doc) -> Sequence[str]:
    return doc.tokens if isinstance(doc, ProcessedDoc) else doc


def extract_ngrams(tokens: Sequence[str], ngram_range: Tuple[int, int] = DEFAULT_NGRAM_RANGE) -> List[str]:
    """
    All contiguous n-grams for n in [low, high], ordered by n then position.

    Args:
        tokens: Preprocessed tokens
        ngram_range: Inclusive (low, high) gram lengths

    Returns:
        Grams with their tokens joined by ``NGRAM_SEPARATOR``
    """
    low, high = ngram_range
    if not 1 <= low <= high:
        raise ValueError(f"invalid ngram range {ngram_range}")
    tokens = list(tokens)
    grams: List[str] = []
    for n in range(low, high + 1):
        for start in range(len(tokens) - n + 1):
            grams.append(NGRAM_SEPARATOR.join(tokens[start:start + n]))
    return grams


def fit_vocabulary(
    docs: Sequence[Doc],
    ngram_range: Tuple[int, int] = DEFAULT_NGRAM_RANGE,
    min_df: int = DEFAULT_MIN_DF,
) -> Vocabulary:
    """
    Fit an n-gram vocabulary on training documents.

    Every gram found in at least ``min_df`` documents gets an index; indices
    follow lexicographic gram order.

    Raises:
        EmptyCorpusError: If there are no documents
    """
    if len(docs) == 0:
        raise EmptyCorpusError("cannot fit a vocabulary on zero documents")
    if min_df < 1:
        raise ValueError(f"min_df must be >= 1, got {min_df}")

    df: Counter = Counter()
    for doc in docs:
        df.update(set(extract_ngrams(_tokens(doc), ngram_range)))

    grams = sorted(g for g, count in df.items() if count >= min_df)
    vocab = Vocabulary(
        grams=grams,
        document_frequency=np.array([df[g] for g in grams], dtype=np.int64),
        ngram_range=tuple(ngram_range),
        n_documents=len(docs),
        min_df=min_df,
    )
    logger.info(
        f"Fitted vocabulary: {len(vocab)} grams from {len(docs)} documents "
        f"(range {ngram_range}, min_df {min_df}, {len(df) - len(vocab)} below threshold)"
    )
    return vocab


def _gram_counts(doc: Doc, vocab: Vocabulary) -> Dict[int, int]:
    counts: Dict[int, int] = {}
    for gram in extract_ngrams(_tokens(doc), vocab.ngram_range):
        idx = vocab.index.get(gram)
        if idx is not None:
            counts[idx] = counts.get(idx, 0) + 1
    return counts


def bow_transform(doc: Doc, vocab: Vocabulary) -> SparseVector:
    """Raw in-vocabulary gram counts of one document."""
    return SparseVector.from_mapping(_gram_counts(doc, vocab), len(vocab))


def tf(count: int) -> float:
    """Log-scaled term frequency, ``ln(1 + count)``."""
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    return math.log1p(count)


def idf(gram: str, vocab: Vocabulary) -> float:
    """
    Inverse document frequency, ``ln(N / df)``.

    Raises:
        VocabularyError: If the gram is not in the vocabulary
    """
    if gram not in vocab.index:
        raise VocabularyError(f"gram not in vocabulary: {gram!r}")
    return math.log(vocab.n_documents / vocab.df(gram))


def fit_tfidf(vocab: Vocabulary) -> TfIdfModel:
    """Attach idf weights to every vocabulary gram."""
    weights = np.log(vocab.n_documents / vocab.document_frequency.astype(np.float64))
    return TfIdfModel(vocabulary=vocab, idf_weights=weights)


def tfidf_transform(doc: Doc, model: TfIdfModel) -> SparseVector:
    """``tf(count) * idf(gram)`` for each in-vocabulary gram; zero weights are not stored."""
    counts = _gram_counts(doc, model.vocabulary)
    weights = {idx: tf(count) * float(model.idf_weights[idx]) for idx, count in counts.items()}
    return SparseVector.from_mapping(weights, len(model.vocabulary))


def bow_matrix(docs: Sequence[Doc], vocab: Vocabulary) -> sp.csr_matrix:
    """Stack BoW vectors for many documents into a CSR matrix (one row per document)."""
    rows: List[int] = []
    cols: List[int] = []
    data: List[float] = []
    for i, doc in enumerate(docs):
        for idx, count in _gram_counts(doc, vocab).items():
            rows.append(i)
            cols.append(idx)
            data.append(float(count))
    matrix = sp.csr_matrix(
        (np.array(data, dtype=np.float64), (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))),
        shape=(len(docs), len(vocab)),
    )
    matrix.sort_indices()
    return matrix


def tfidf_matrix(docs: Sequence[Doc], model: TfIdfModel) -> sp.csr_matrix:
    """TF-IDF rows for many documents; identical entries to ``tfidf_transform`` per row."""
    matrix = bow_matrix(docs, model.vocabulary)
    matrix.data = np.log1p(matrix.data) * model.idf_weights[matrix.indices]
    matrix.eliminate_zeros()
    return matrix


def top_idf_columns(model: TfIdfModel, n_features: int) -> np.ndarray:
    """Indices of the ``n_features`` highest-idf grams, ties to the lower index, sorted ascending."""
    n = min(n_features, len(model.vocabulary))
    order = np.lexsort((np.arange(len(model.idf_weights)), -model.idf_weights))
    return np.sort(order[:n])


# Persistence

def save_vocabulary(model: Union[Vocabulary, TfIdfModel], path: PathLike) -> Path:
    """
    Persist a vocabulary (and idf weights, when given a TfIdfModel) as JSON.

    Each gram is one row of ``{"gram", "index", "df", "idf"}``; ``idf`` is
    null for plain vocabularies.
    """
    if isinstance(model, TfIdfModel):
        vocab, weights = model.vocabulary, model.idf_weights
    else:
        vocab, weights = model, None
    payload = {
        "ngram_range": list(vocab.ngram_range),
        "n_documents": vocab.n_documents,
        "min_df": vocab.min_df,
        "grams": [
            {
                "gram": gram,
                "index": i,
                "df": int(vocab.document_frequency[i]),
                "idf": None if weights is None else float(weights[i]),
            }
            for i, gram in enumerate(vocab.grams)
        ],
    }
    return write_json(path, payload)


def load_vocabulary(path: PathLike) -> Union[Vocabulary, TfIdfModel]:
    """Load a file written by ``save_vocabulary``; returns a TfIdfModel when idf weights are present."""
    payload = read_json(path)
    rows = sorted(payload["grams"], key=lambda row: row["index"])
    vocab = Vocabulary(
        grams=[row["gram"] for row in rows],
        document_frequency=np.array([row["df"] for row in rows], dtype=np.int64),
        ngram_range=tuple(payload["ngram_range"]),
        n_documents=int(payload["n_documents"]),
        min_df=int(payload.get("min_df", 1)),
    )
    if rows and all(row.get("idf") is not None for row in rows):
        return TfIdfModel(vocabulary=vocab, idf_weights=np.array([row["idf"] for row in rows]))
    return vocab


def export_coordinates(matrix: sp.spmatrix, path: PathLike) -> Path:
    """
    Write a sparse matrix in coordinate text form.

    The first line is ``n_rows n_cols nnz``; each following line is
    ``row col value`` (zero-based, row-major, value in shortest round-trip form).
    """
    coo = sp.csr_matrix(matrix).tocoo()
    order = np.lexsort((coo.col, coo.row))

    def _write(p: Path) -> None:
        with open(p, "w", encoding="utf-8", newline="\n") as f:
            f.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
            for k in order:
                f.write(f"{int(coo.row[k])} {int(coo.col[k])} {float(coo.data[k])!r}\n")

    return atomic_write(path, _write)


def import_coordinates(path: PathLike) -> sp.csr_matrix:
    """Read a matrix written by ``export_coordinates``."""
    with open(path, "r", encoding="utf-8") as f:
        n_rows, n_cols, nnz = (int(v) for v in f.readline().split())
        rows, cols, data = [], [], []
        for line in f:
            r, c, v = line.split()
            rows.append(int(r))
            cols.append(int(c))
            data.append(float(v))
    if len(data) != nnz:
        raise ValueError(f"coordinate file {path} declares {nnz} entries but holds {len(data)}")
    return sp.csr_matrix((data, (rows, cols)), shape=(n_rows, n_cols))


def transform_all(docs: Iterable[Doc], model: Union[Vocabulary, TfIdfModel]) -> List[SparseVector]:
    """Per-document vectors for either scheme."""
    if isinstance(model, TfIdfModel):
        return [tfidf_transform(d, model) for d in docs]
    return [bow_transform(d, model) for d in docs]
