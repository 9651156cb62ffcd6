"""
Dense document features: skip-gram word embeddings averaged per document,
and the fifteen hand-built review features.
"""

import re
import string
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from .models.features import ConditionEncoder, EmbeddingTable
from .models.review import ProcessedDoc, ReviewRecord
from .textprep import DATA_DIR, clean_text, load_stopwords
from .utils.constants import (
    EMBEDDING_DIM,
    EMBEDDING_EPOCHS,
    EMBEDDING_LEARNING_RATE,
    EMBEDDING_MIN_LEARNING_RATE,
    EMBEDDING_NEGATIVES,
    EMBEDDING_WINDOW,
    MANUAL_FEATURES,
    NEGATIVE_SAMPLING_POWER,
    NEGATORS,
    TEXT_STAT_FEATURES,
)
from .utils.exceptions import EmptyCorpusError
from .utils.io import PathLike, atomic_write, read_json, write_json

SENTIMENT_LEXICON_FILE = DATA_DIR / "sentiment_lexicon.txt"

_POLARITY_TOKEN_RE = re.compile(r"[a-z]+(?:'[a-z]+)?")
_PUNCTUATION = frozenset(string.punctuation)

Doc = Union[ProcessedDoc, Sequence[str]]


def _tokens(doc: Doc) -> Sequence[str]:
    return doc.tokens if isinstance(doc, ProcessedDoc) else doc


# Word2Vec

def _build_vocab(docs: Sequence[Sequence[str]], min_count: int) -> Tuple[List[str], np.ndarray]:
    counts = Counter(token for doc in docs for token in doc)
    # frequency descending, then token, so index order is reproducible
    items = sorted(((t, c) for t, c in counts.items() if c >= min_count), key=lambda tc: (-tc[1], tc[0]))
    return [t for t, _ in items], np.array([c for _, c in items], dtype=np.float64)


def _noise_cdf(counts: np.ndarray, power: float = NEGATIVE_SAMPLING_POWER) -> np.ndarray:
    weights = counts ** power
    cdf = np.cumsum(weights / weights.sum())
    cdf[-1] = 1.0
    return cdf


def _skipgram_pairs(ids: np.ndarray, window: int) -> Tuple[np.ndarray, np.ndarray]:
    """(center, context) index pairs for every position and every offset within the window."""
    centers: List[np.ndarray] = []
    contexts: List[np.ndarray] = []
    n = len(ids)
    for offset in range(1, min(window, n - 1) + 1):
        centers.append(ids[:-offset])
        contexts.append(ids[offset:])
        centers.append(ids[offset:])
        contexts.append(ids[:-offset])
    if not centers:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(centers), np.concatenate(contexts)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _train_document(
    ids: np.ndarray,
    w_in: np.ndarray,
    w_out: np.ndarray,
    cdf: np.ndarray,
    window: int,
    negatives: int,
    lr: float,
    rng: np.random.Generator,
) -> Tuple[float, int]:
    """One negative-sampling SGD step over all skip-gram pairs of a document. Returns (loss sum, pairs)."""
    centers, contexts = _skipgram_pairs(ids, window)
    n_pairs = len(centers)
    if n_pairs == 0:
        return 0.0, 0

    noise = np.searchsorted(cdf, rng.random((n_pairs, negatives)), side="right")
    noise = np.minimum(noise, len(cdf) - 1)
    targets = np.concatenate([contexts[:, None], noise], axis=1)
    labels = np.zeros(targets.shape, dtype=np.float64)
    labels[:, 0] = 1.0
    # a noise draw equal to the true context word is skipped
    active = np.ones(targets.shape, dtype=np.float64)
    active[:, 1:] = noise != contexts[:, None]

    v = w_in[centers]
    u = w_out[targets]
    scores = np.einsum("pd,pkd->pk", v, u)
    probs = _sigmoid(scores)
    eps = 1e-12
    loss = -(
        np.log(probs[:, 0] + eps).sum()
        + (active[:, 1:] * np.log(1.0 - probs[:, 1:] + eps)).sum()
    )

    g = (labels - probs) * active * lr
    grad_in = np.einsum("pk,pkd->pd", g, u)
    grad_out = g[:, :, None] * v[:, None, :]
    np.add.at(w_out, targets.ravel(), grad_out.reshape(-1, w_out.shape[1]))
    np.add.at(w_in, centers, grad_in)
    return float(loss), n_pairs


def train_word2vec(
    docs: Sequence[Doc],
    dimension: int = EMBEDDING_DIM,
    window: int = EMBEDDING_WINDOW,
    negatives: int = EMBEDDING_NEGATIVES,
    epochs: int = EMBEDDING_EPOCHS,
    seed: int = 0,
    learning_rate: float = EMBEDDING_LEARNING_RATE,
    min_learning_rate: float = EMBEDDING_MIN_LEARNING_RATE,
    min_count: int = 1,
    fast: bool = False,
    n_workers: int = 4,
) -> EmbeddingTable:
    """
    Train skip-gram embeddings with negative sampling.

    Input vectors start uniform in [-0.5/d, 0.5/d] and output vectors at zero.
    Noise words are drawn from the unigram distribution raised to 3/4. The
    learning rate decays linearly with the number of documents processed.
    Documents are visited in input order every epoch, so the table is a
    deterministic function of the documents and the seed.

    Args:
        docs: Preprocessed training documents
        dimension: Embedding width d
        window: Context radius on each side of the center token
        negatives: Noise samples per (center, context) pair
        epochs: Passes over the corpus
        seed: Seed for initialization and noise draws
        learning_rate: Initial step size
        min_learning_rate: Floor of the decayed step size
        min_count: Tokens seen fewer times are left out of the table
        fast: Train document shards on threads with lock-free shared updates.
            Results are then no longer reproducible.
        n_workers: Threads used when ``fast`` is set

    Returns:
        EmbeddingTable with one vector per training token and per-epoch mean loss

    Raises:
        EmptyCorpusError: If the documents hold no tokens
    """
    if dimension < 1 or window < 1 or negatives < 1 or epochs < 1:
        raise ValueError("dimension, window, negatives and epochs must all be >= 1")
    token_docs = [list(_tokens(d)) for d in docs]
    vocab, counts = _build_vocab(token_docs, min_count)
    if not vocab:
        raise EmptyCorpusError("cannot train embeddings on an empty corpus")

    index = {t: i for i, t in enumerate(vocab)}
    id_docs = [np.array([index[t] for t in doc if t in index], dtype=np.int64) for doc in token_docs]
    id_docs = [ids for ids in id_docs if len(ids) > 1]

    rng = np.random.default_rng(seed)
    w_in = (rng.random((len(vocab), dimension)) - 0.5) / dimension
    w_out = np.zeros((len(vocab), dimension), dtype=np.float64)
    cdf = _noise_cdf(counts)

    total_steps = max(1, epochs * len(id_docs))
    history: List[float] = []
    logger.info(
        f"Training word2vec: {len(vocab)} tokens, {len(id_docs)} documents, d={dimension}, "
        f"window {window}, {negatives} negatives, {epochs} epochs{' (fast)' if fast else ''}"
    )

    for epoch in range(epochs):
        base_step = epoch * len(id_docs)
        if fast and n_workers > 1 and len(id_docs) > n_workers:
            shards = np.array_split(np.arange(len(id_docs)), n_workers)
            streams = [np.random.default_rng(s) for s in np.random.SeedSequence([seed, epoch]).spawn(n_workers)]

            def _run(shard: np.ndarray, shard_rng: np.random.Generator) -> Tuple[float, int]:
                loss_sum, pair_sum = 0.0, 0
                for step, doc_i in enumerate(shard):
                    progress = (base_step + step * n_workers) / total_steps
                    lr = max(min_learning_rate, learning_rate * (1.0 - progress))
                    loss, pairs = _train_document(
                        id_docs[doc_i], w_in, w_out, cdf, window, negatives, lr, shard_rng
                    )
                    loss_sum += loss
                    pair_sum += pairs
                return loss_sum, pair_sum

            with ThreadPoolExecutor(max_workers=n_workers) as executor:
                results = list(executor.map(_run, shards, streams))
            epoch_loss = sum(r[0] for r in results)
            epoch_pairs = sum(r[1] for r in results)
        else:
            epoch_loss, epoch_pairs = 0.0, 0
            for step, ids in enumerate(id_docs):
                lr = max(min_learning_rate, learning_rate * (1.0 - (base_step + step) / total_steps))
                loss, pairs = _train_document(ids, w_in, w_out, cdf, window, negatives, lr, rng)
                epoch_loss += loss
                epoch_pairs += pairs

        mean_loss = epoch_loss / epoch_pairs if epoch_pairs else 0.0
        history.append(mean_loss)
        logger.debug(f"word2vec epoch {epoch + 1}/{epochs}: mean loss {mean_loss:.5f}")

    return EmbeddingTable(
        tokens=vocab,
        vectors=w_in,
        window=window,
        negatives=negatives,
        epochs=epochs,
        seed=seed,
        loss_history=history,
    )


def doc_vector(tokens: Sequence[str], table: EmbeddingTable) -> np.ndarray:
    """Mean embedding of the in-vocabulary tokens; zero vector when there are none."""
    ids = sorted(table.index[t] for t in tokens if t in table.index)
    if not ids:
        return np.zeros(table.dimension, dtype=np.float64)
    return table.vectors[ids].mean(axis=0)


def embedding_matrix(docs: Sequence[Doc], table: EmbeddingTable) -> np.ndarray:
    """Stacked document vectors, one row per document."""
    if not docs:
        return np.zeros((0, table.dimension), dtype=np.float64)
    return np.vstack([doc_vector(_tokens(d), table) for d in docs])


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    denom = float(np.linalg.norm(a) * np.linalg.norm(b))
    return float(a @ b) / denom if denom else 0.0


def save_embeddings(table: EmbeddingTable, path: PathLike) -> Path:
    """Text format: a ``count dim`` header, then one token and d values per line."""

    def _write(p: Path) -> None:
        with open(p, "w", encoding="utf-8", newline="\n") as f:
            f.write(f"{len(table)} {table.dimension}\n")
            for token, row in zip(table.tokens, table.vectors):
                f.write(token + " " + " ".join(repr(float(v)) for v in row) + "\n")

    return atomic_write(path, _write)


def load_embeddings(path: PathLike) -> EmbeddingTable:
    with open(path, "r", encoding="utf-8") as f:
        count, dim = (int(v) for v in f.readline().split())
        tokens: List[str] = []
        rows: List[List[float]] = []
        for line in f:
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ValueError(f"embedding row for {parts[0]!r} has {len(parts) - 1} values, expected {dim}")
            tokens.append(parts[0])
            rows.append([float(v) for v in parts[1:]])
    if len(tokens) != count:
        raise ValueError(f"embedding file {path} declares {count} tokens but holds {len(tokens)}")
    vectors = np.array(rows, dtype=np.float64).reshape(count, dim)
    return EmbeddingTable(tokens=tokens, vectors=vectors)


# Polarity

@lru_cache(maxsize=4)
def load_sentiment_lexicon(path: Union[str, Path] = SENTIMENT_LEXICON_FILE) -> Dict[str, float]:
    """Two-column lexicon: token and a score in [-1, 1]."""
    lexicon: Dict[str, float] = {}
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            token, score = line.split()
            value = float(score)
            if not -1.0 <= value <= 1.0:
                raise ValueError(f"lexicon score for {token!r} outside [-1, 1]: {value}")
            lexicon[token.lower()] = value
    logger.debug(f"Loaded {len(lexicon)} sentiment lexicon entries from {path}")
    return lexicon


def _is_negator(token: str) -> bool:
    return token in NEGATORS or token.endswith("n't")


def _negated(tokens: Sequence[str], i: int) -> bool:
    """Whether tokens[i] follows a negator, including a contraction split by cleaning ("didn t")."""
    if i > 0 and _is_negator(tokens[i - 1]):
        return True
    return i > 1 and tokens[i - 1] == "t" and tokens[i - 2].endswith("n")


def polarity(text: str, lexicon: Optional[Dict[str, float]] = None) -> float:
    """
    Mean lexicon score of the sentiment words in ``text``.

    A sentiment word directly after a negator ("not", "no", "never" or a
    "n't" contraction, also in the "didn t" form cleaned text leaves)
    counts with its sign flipped. Text without sentiment words scores 0.0.
    """
    scores = load_sentiment_lexicon() if lexicon is None else lexicon
    tokens = _POLARITY_TOKEN_RE.findall(text.lower()) if text else []
    matched: List[float] = []
    for i, token in enumerate(tokens):
        score = scores.get(token)
        if score is None:
            continue
        if _negated(tokens, i):
            score = -score
        matched.append(score)
    if not matched:
        return 0.0
    return float(sum(matched) / len(matched))


# Text statistics

def text_stats(raw: str, stopwords: Optional[FrozenSet[str]] = None) -> np.ndarray:
    """
    Eight surface counts of raw review text, in ``TEXT_STAT_FEATURES`` order.

    Words are whitespace-separated chunks. Stopword, unique-word and length
    measures use each word with surrounding punctuation stripped and
    lowercased; letters are alphabetic characters only.
    """
    lexicon = load_stopwords() if stopwords is None else stopwords
    if not raw:
        return np.zeros(len(TEXT_STAT_FEATURES), dtype=np.float64)

    words = raw.split()
    bare = [w.strip(string.punctuation).lower() for w in words]
    word_count = len(words)
    values = [
        sum(ch in _PUNCTUATION for ch in raw),
        word_count,
        sum(b in lexicon for b in bare),
        sum(ch.isalpha() for ch in raw),
        len({b for b in bare if b}),
        (sum(len(b) for b in bare) / word_count) if word_count else 0.0,
        sum(w.isupper() for w in words),
        sum(w.istitle() and not w.isupper() for w in words),
    ]
    return np.array(values, dtype=np.float64)


# Manual features

def fit_condition_encoder(records: Sequence[ReviewRecord]) -> ConditionEncoder:
    """Fit condition codes on the training records."""
    encoder = ConditionEncoder.fit(r.condition for r in records)
    logger.info(f"Fitted condition encoder with {len(encoder)} conditions")
    return encoder


def save_condition_encoder(encoder: ConditionEncoder, path: PathLike) -> Path:
    return write_json(path, {"mapping": encoder.mapping})


def load_condition_encoder(path: PathLike) -> ConditionEncoder:
    payload = read_json(path)
    return ConditionEncoder(mapping={str(k): int(v) for k, v in payload["mapping"].items()})


def manual_features(
    record: ReviewRecord,
    encoder: ConditionEncoder,
    stopwords: Optional[FrozenSet[str]] = None,
    lexicon: Optional[Dict[str, float]] = None,
) -> np.ndarray:
    """
    The fifteen hand-built features of one review, in ``MANUAL_FEATURES`` order.

    Args:
        record: Review to describe
        encoder: Condition codes fitted on the training set; unseen conditions get the reserved code
        stopwords: Stopword lexicon for the text statistics
        lexicon: Sentiment lexicon for the polarity features

    Returns:
        Float vector of length 15
    """
    raw = record.review_text
    vector = np.empty(len(MANUAL_FEATURES), dtype=np.float64)
    vector[0] = record.useful_count
    vector[1] = encoder.encode(record.condition)
    vector[2] = record.date.day
    vector[3] = record.date.month
    vector[4] = record.date.year
    vector[5] = polarity(clean_text(raw), lexicon)
    vector[6] = polarity(raw, lexicon)
    vector[7:] = text_stats(raw, stopwords)
    if not np.all(np.isfinite(vector)):
        raise ValueError(f"non-finite manual features for record {record.unique_id}")
    return vector


def manual_matrix(
    records: Sequence[ReviewRecord],
    encoder: ConditionEncoder,
    max_workers: int = 1,
    stopwords: Optional[FrozenSet[str]] = None,
    lexicon: Optional[Dict[str, float]] = None,
) -> np.ndarray:
    """Manual feature rows for many records, in input order."""
    stop = load_stopwords() if stopwords is None else stopwords
    lex = load_sentiment_lexicon() if lexicon is None else lexicon
    if not records:
        return np.zeros((0, len(MANUAL_FEATURES)), dtype=np.float64)
    if max_workers <= 1 or len(records) < 1000:
        rows = [manual_features(r, encoder, stop, lex) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            rows = list(executor.map(lambda r: manual_features(r, encoder, stop, lex), records))
    return np.vstack(rows)

