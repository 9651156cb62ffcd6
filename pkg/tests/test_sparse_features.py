"""Tests for n-gram vocabularies, BoW and TF-IDF vectors."""

import math

import numpy as np
import pytest

from src.sparse_features import (
    bow_matrix,
    bow_transform,
    export_coordinates,
    extract_ngrams,
    fit_tfidf,
    fit_vocabulary,
    idf,
    import_coordinates,
    load_vocabulary,
    save_vocabulary,
    tf,
    tfidf_matrix,
    tfidf_transform,
    top_idf_columns,
)
from src.models.features import TfIdfModel, Vocabulary
from src.utils.constants import NGRAM_SEPARATOR
from src.utils.exceptions import EmptyCorpusError, VocabularyError

SEP = NGRAM_SEPARATOR


@pytest.fixture
def tiny_docs():
    return [["a", "b"], ["a"], ["a", "c"]]


@pytest.fixture
def review_docs():
    return [
        ["drug", "work", "great", "no", "side", "effect"],
        ["terrible", "side", "effect", "headache"],
        ["work", "great", "great", "sleep"],
        ["no", "relief", "headache", "worse"],
        ["side", "effect", "mild", "work"],
    ]


def test_extract_ngrams_orders_by_length_then_position():
    assert extract_ngrams(["x", "y", "z"], (1, 2)) == ["x", "y", "z", f"x{SEP}y", f"y{SEP}z"]
    assert extract_ngrams(["x"], (2, 2)) == []
    with pytest.raises(ValueError):
        extract_ngrams(["x"], (2, 1))


class TestVocabulary:
    def test_min_df_and_order(self, review_docs):
        vocab = fit_vocabulary(review_docs, (1, 2), min_df=2)
        assert vocab.grams == sorted(vocab.grams)
        assert f"side{SEP}effect" in vocab
        assert "sleep" not in vocab
        assert vocab.df("side") == 3
        assert vocab.df("great") == 2
        assert vocab.n_documents == 5

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpusError):
            fit_vocabulary([], (1, 1), 1)


class TestWeights:
    def test_tf_is_log_scaled(self):
        assert tf(0) == 0.0
        assert tf(1) == pytest.approx(math.log(2))
        with pytest.raises(ValueError):
            tf(-1)

    def test_tfidf_small_example(self, tiny_docs):
        vocab = fit_vocabulary(tiny_docs, (1, 1), min_df=1)
        model = fit_tfidf(vocab)
        assert idf("a", vocab) == 0.0
        assert idf("b", vocab) == pytest.approx(math.log(3))

        vec = tfidf_transform(tiny_docs[0], model)
        # "a" occurs in every document, so its zero weight is not stored
        assert vec.entries() == [(vocab.index["b"], pytest.approx(math.log(2) * math.log(3)))]
        assert vec.entries()[0][1] == pytest.approx(0.7615, abs=1e-4)

    def test_unknown_gram(self, tiny_docs):
        vocab = fit_vocabulary(tiny_docs, (1, 1), min_df=1)
        with pytest.raises(VocabularyError):
            idf("zzz", vocab)

    def test_out_of_vocabulary_grams_are_ignored(self, tiny_docs):
        vocab = fit_vocabulary(tiny_docs, (1, 1), min_df=1)
        assert bow_transform(["q", "b", "b", "q"], vocab).entries() == [(vocab.index["b"], 2.0)]
        assert len(bow_transform(["q"], vocab)) == 0


def test_matrices_agree_with_single_document_transforms(review_docs):
    vocab = fit_vocabulary(review_docs, (1, 2), min_df=1)
    model = fit_tfidf(vocab)
    counts = bow_matrix(review_docs, vocab)
    weights = tfidf_matrix(review_docs, model)
    assert counts.shape == weights.shape == (5, len(vocab))
    for i, doc in enumerate(review_docs):
        np.testing.assert_allclose(counts[i].toarray().ravel(), bow_transform(doc, vocab).to_dense())
        np.testing.assert_allclose(weights[i].toarray().ravel(), tfidf_transform(doc, model).to_dense())
    assert not np.any(weights.data == 0)


def test_top_idf_columns_prefers_rare_grams(review_docs):
    vocab = fit_vocabulary(review_docs, (1, 1), min_df=1)
    model = fit_tfidf(vocab)
    cols = top_idf_columns(model, 3)
    assert list(cols) == sorted(cols)
    assert all(vocab.document_frequency[c] == 1 for c in cols)
    assert len(top_idf_columns(model, 10_000)) == len(vocab)


def test_vocabulary_persistence(review_docs, tmp_path):
    vocab = fit_vocabulary(review_docs, (1, 2), min_df=1)
    model = fit_tfidf(vocab)

    save_vocabulary(model, tmp_path / "tfidf.json")
    loaded = load_vocabulary(tmp_path / "tfidf.json")
    assert isinstance(loaded, TfIdfModel)
    assert loaded.vocabulary.grams == vocab.grams
    np.testing.assert_array_equal(loaded.idf_weights, model.idf_weights)

    save_vocabulary(vocab, tmp_path / "bow.json")
    assert isinstance(load_vocabulary(tmp_path / "bow.json"), Vocabulary)


def test_coordinate_export(review_docs, tmp_path):
    vocab = fit_vocabulary(review_docs, (1, 1), min_df=1)
    matrix = tfidf_matrix(review_docs, fit_tfidf(vocab))
    path = export_coordinates(matrix, tmp_path / "train.coo")
    header = path.read_text().splitlines()[0]
    assert header == f"5 {len(vocab)} {matrix.nnz}"
    assert (import_coordinates(path) != matrix).nnz == 0
