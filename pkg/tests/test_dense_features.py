"""Tests for word embeddings, polarity, text statistics and manual features."""

import datetime as dt

import numpy as np
import pytest

from src.dense_features import (
    cosine,
    doc_vector,
    embedding_matrix,
    fit_condition_encoder,
    load_condition_encoder,
    load_embeddings,
    manual_features,
    manual_matrix,
    polarity,
    save_condition_encoder,
    save_embeddings,
    text_stats,
    train_word2vec,
)
from src.textprep import clean_text
from src.utils.constants import MANUAL_FEATURES, UNSEEN_CONDITION_CODE
from src.utils.exceptions import EmptyCorpusError

from .conftest import make_record


@pytest.fixture(scope="module")
def two_topic_docs():
    return [["a", "b", "p", "q"], ["x", "y", "r", "s"]] * 100


@pytest.fixture(scope="module")
def two_topic_table(two_topic_docs):
    return train_word2vec(two_topic_docs, dimension=8, window=3, negatives=3, epochs=30, seed=1, learning_rate=0.05)


class TestWord2Vec:
    def test_shared_contexts_give_closer_vectors(self, two_topic_table):
        t = two_topic_table
        assert cosine(t["a"], t["b"]) > cosine(t["a"], t["x"])
        assert cosine(t["x"], t["y"]) > cosine(t["x"], t["b"])

    def test_loss_decreases(self, two_topic_table):
        history = two_topic_table.loss_history
        assert len(history) == 30
        assert history[-1] < history[0]

    def test_deterministic_for_a_seed(self, two_topic_docs):
        first = train_word2vec(two_topic_docs[:20], dimension=4, epochs=2, seed=9)
        second = train_word2vec(two_topic_docs[:20], dimension=4, epochs=2, seed=9)
        other = train_word2vec(two_topic_docs[:20], dimension=4, epochs=2, seed=10)
        assert first.tokens == second.tokens
        np.testing.assert_array_equal(first.vectors, second.vectors)
        assert not np.array_equal(first.vectors, other.vectors)

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpusError):
            train_word2vec([[], []], dimension=4)

    def test_doc_vector(self, two_topic_table):
        t = two_topic_table
        np.testing.assert_array_equal(doc_vector(["a", "b"], t), doc_vector(["b", "a"], t))
        np.testing.assert_allclose(doc_vector(["a", "unknown"], t), t["a"])
        np.testing.assert_array_equal(doc_vector(["unknown"], t), np.zeros(8))
        assert embedding_matrix([["a"], [], ["x", "y"]], t).shape == (3, 8)

    def test_persistence(self, two_topic_table, tmp_path):
        path = save_embeddings(two_topic_table, tmp_path / "embeddings.txt")
        loaded = load_embeddings(path)
        assert loaded.tokens == two_topic_table.tokens
        np.testing.assert_array_equal(loaded.vectors, two_topic_table.vectors)


class TestPolarity:
    @pytest.mark.parametrize("text,expected", [
        ("good", 0.7),
        ("not good", -0.7),
        ("isn't good", -0.7),
        ("isn t good", -0.7),
        ("good but bad", 0.0),
        ("the pill", 0.0),
        ("", 0.0),
    ])
    def test_scores(self, text, expected):
        assert polarity(text) == pytest.approx(expected)

    def test_custom_lexicon(self):
        assert polarity("calm calm never calm", {"calm": 0.5}) == pytest.approx(0.5 / 3)

    def test_cleaned_contraction_still_negates(self):
        for text in ("It didn't hurt. It isn't good!", "I don't feel bad"):
            assert polarity(clean_text(text)) == pytest.approx(polarity(text))
        features = manual_features(make_record(review_text="It isn't good"), fit_condition_encoder([make_record()]))
        assert features[5] == pytest.approx(features[6])
        assert features[5] < 0


def test_text_stats():
    stats = text_stats("Hello, World! THIS is great.")
    np.testing.assert_allclose(stats, [3, 5, 2, 21, 5, 4.2, 1, 2])
    np.testing.assert_array_equal(text_stats(""), np.zeros(8))


class TestManualFeatures:
    def test_layout(self, small_records):
        encoder = fit_condition_encoder(small_records)
        record = make_record(
            unique_id=7,
            condition="Pain",
            review_text="Not good at all!",
            date=dt.date(2015, 5, 20),
            useful_count=10,
        )
        vector = manual_features(record, encoder)
        assert vector.shape == (len(MANUAL_FEATURES),) == (15,)
        assert vector[0] == 10
        assert vector[1] == encoder.mapping["Pain"]
        assert list(vector[2:5]) == [20, 5, 2015]
        assert vector[5] == pytest.approx(-0.7)
        assert vector[6] == pytest.approx(-0.7)
        assert np.all(np.isfinite(vector))

    def test_unseen_condition(self, small_records):
        encoder = fit_condition_encoder(small_records)
        assert encoder.mapping == {"Depression": 0, "Insomnia": 1, "Pain": 2}
        vector = manual_features(make_record(condition="Acne"), encoder)
        assert vector[1] == UNSEEN_CONDITION_CODE

    def test_matrix_and_encoder_persistence(self, small_records, tmp_path):
        encoder = fit_condition_encoder(small_records)
        matrix = manual_matrix(small_records, encoder)
        assert matrix.shape == (5, 15)
        np.testing.assert_array_equal(matrix[3], manual_features(small_records[3], encoder))

        path = save_condition_encoder(encoder, tmp_path / "condition_encoder.json")
        assert load_condition_encoder(path).mapping == encoder.mapping
