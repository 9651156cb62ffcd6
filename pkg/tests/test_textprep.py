"""Tests for the review text preprocessing chain."""

import pytest

from src.textprep import (
    Lemmatizer,
    clean_text,
    combine_fields,
    default_lemmatizer,
    lemmatize,
    load_stopwords,
    preprocess_corpus,
    preprocess_review,
    remove_stopwords,
    tokenize,
)

from .conftest import make_record


def test_clean_text_strips_markup_urls_and_punctuation():
    raw = "<b>GREAT</b> drug!!! See http://example.com/x?a=1 or www.drugs.com &amp; \"ask\" your doctor..."
    assert clean_text(raw) == "great drug see or amp ask your doctor"


def test_clean_text_empty():
    assert clean_text("") == ""
    assert clean_text("  !!! ") == ""


def test_tokenize_splits_on_whitespace():
    assert tokenize("side effects  were mild") == ["side", "effects", "were", "mild"]


def test_stopwords_keep_negators():
    stopwords = load_stopwords()
    assert "the" in stopwords
    assert "not" not in stopwords
    assert "no" not in stopwords
    assert remove_stopwords(["the", "pill", "did", "not", "work"]) == ["pill", "not", "work"]


@pytest.mark.parametrize("token,lemma", [
    ("headaches", "headache"),
    ("pills", "pill"),
    ("worked", "work"),
    ("children", "child"),
    ("went", "go"),
    ("stopped", "stop"),
    ("anxiety", "anxiety"),
    ("10mg", "10mg"),
])
def test_lemmatizer(token, lemma):
    assert default_lemmatizer().lemmatize_token(token) == lemma


def test_lemmatize_is_idempotent():
    tokens = ["headaches", "started", "dizziness", "nausea", "taking", "worse", "effects", "tried", "children"]
    once = lemmatize(tokens)
    assert lemmatize(once) == once


def test_unstable_exception_table_is_rejected():
    with pytest.raises(ValueError):
        Lemmatizer({"went": "goes"})


def test_combine_fields():
    record = make_record(condition="Pain", drug_name="Tramadol", review_text="Helped a lot")
    assert combine_fields(record) == "Pain Tramadol Helped a lot"


def test_preprocess_review():
    record = make_record(
        unique_id=42,
        condition="Migraine",
        drug_name="Sumatriptan",
        review_text="The headaches were NOT gone, but it worked <br> quickly!",
    )
    doc = preprocess_review(record)
    stopwords = load_stopwords()
    assert doc.record_id == 42
    assert doc.raw_text == record.review_text
    assert doc.tokens[:2] == ("migraine", "sumatriptan")
    assert "headache" in doc.tokens
    assert "not" in doc.tokens
    assert "work" in doc.tokens
    assert not any(t in stopwords for t in doc.tokens)


def test_preprocess_corpus_preserves_order(small_records):
    docs = preprocess_corpus(small_records)
    assert [d.record_id for d in docs] == [r.unique_id for r in small_records]
    assert docs[0] == preprocess_review(small_records[0])
