"""Tests for corpus parsing, cleaning, labeling, splitting and summaries."""

import datetime as dt
import math

import pytest

from src.corpus import (
    clean_corpus,
    clean_corpus_with_report,
    derive_label,
    label_vector,
    parse_files,
    parse_tsv,
    split,
    summarize,
    write_stats,
)
from src.models.review import Sentiment
from src.utils.exceptions import CorpusFormatError, EmptyCorpusError, LabelError

from .conftest import generate_corpus_rows, make_record, tsv_bytes


class TestParseTsv:
    def test_parses_rows_and_decodes_entities(self):
        data = tsv_bytes([
            [206461, "Valsartan", "Left Ventricular Dysfunction", "It has no side effect, I take it in combination of Bystolic 5 Mg and Fish Oil", 9, "May 20, 2012", 27],
            [95260, "Guanfacine", "ADHD", "My son &quot;loves&quot; it, he&#039;s calmer", "8.0", "April 27, 2010", 192],
        ])
        parsed = parse_tsv(data)
        assert parsed.ok
        first, second = parsed.records
        assert first.unique_id == 206461
        assert first.drug_name == "Valsartan"
        assert first.date == dt.date(2012, 5, 20)
        assert first.useful_count == 27
        assert second.review_text == 'My son "loves" it, he\'s calmer'
        assert second.rating == 8

    def test_iso_dates_are_accepted(self):
        parsed = parse_tsv(tsv_bytes([[1, "A", "Pain", "ok", 5, "2015-03-04", 1]]))
        assert parsed.records[0].date == dt.date(2015, 3, 4)

    def test_bad_row_is_reported_with_its_line(self):
        data = tsv_bytes([
            [1, "A", "Pain", "first review\nspans two lines", 7, "May 1, 2010", 3],
            [2, "B", "Pain", "rating is broken", "ten", "May 2, 2010", 4],
            [3, "C", "Pain", "fine", 11, "May 3, 2010", 5],
            [4, "D", "Pain", "fine", 4, "May 4, 2010", 6],
        ])
        parsed = parse_tsv(data)
        assert [r.unique_id for r in parsed.records] == [1, 4]
        assert [e.line for e in parsed.errors] == [4, 5]
        assert "rating" in parsed.errors[0].reason

    def test_missing_required_field(self):
        parsed = parse_tsv(tsv_bytes([[1, "", "Pain", "text", 5, "May 1, 2010", 0]]))
        assert not parsed.records
        assert "drugName" in parsed.errors[0].reason

    def test_missing_header_is_fatal(self):
        with pytest.raises(CorpusFormatError):
            parse_tsv(b"")
        with pytest.raises(CorpusFormatError):
            parse_tsv(b"1\tA\tPain\ttext\t5\tMay 1, 2010\t0\n")

    def test_parse_files_concatenates_in_order(self, tmp_path):
        a = tmp_path / "a.tsv"
        b = tmp_path / "b.tsv"
        a.write_bytes(tsv_bytes([[1, "A", "Pain", "x", 5, "May 1, 2010", 0]]))
        b.write_bytes(tsv_bytes([[2, "B", "Acne", "y", 6, "May 2, 2010", 1]]))
        parsed = parse_files([a, b])
        assert [r.unique_id for r in parsed.records] == [1, 2]


class TestCleaning:
    def test_drops_null_junk_and_duplicates(self):
        records = [
            make_record(1, condition="Depression"),
            make_record(2, condition=None),
            make_record(3, condition="   "),
            make_record(4, condition="3</span> users found this comment helpful."),
            make_record(1, condition="Pain"),
            make_record(5, condition="Pain"),
        ]
        cleaned, report = clean_corpus_with_report(records)
        assert [r.unique_id for r in cleaned] == [1, 5]
        assert cleaned[0].condition == "Depression"
        assert report.null_condition == 2
        assert report.junk_condition == 1
        assert report.duplicate_id == 1
        assert report.removed == 4
        assert report.output_rows == 2

    def test_cleaning_is_idempotent(self):
        records = parse_tsv(tsv_bytes(generate_corpus_rows(300, seed=3))).records
        once = clean_corpus(records)
        assert clean_corpus(once) == once
        assert all(r.condition for r in once)


class TestLabels:
    @pytest.mark.parametrize("rating,expected", [
        (1, Sentiment.NEGATIVE),
        (5, Sentiment.NEGATIVE),
        (6, Sentiment.POSITIVE),
        (10, Sentiment.POSITIVE),
    ])
    def test_threshold(self, rating, expected):
        assert derive_label(rating) is expected

    @pytest.mark.parametrize("rating", [0, 11, -3])
    def test_out_of_range(self, rating):
        with pytest.raises(LabelError):
            derive_label(rating)

    def test_label_vector(self, small_records):
        assert label_vector(small_records).tolist() == [1, 0, 1, 0, 1]


class TestSplit:
    def test_cleaned_corpus_sizes(self):
        # 212141 cleaned rows at 0.75
        parts = split(list(range(212141)), 0.75, seed=42)
        assert len(parts.train) == 159105
        assert len(parts.test) == 53036

    def test_same_seed_same_membership(self):
        records = [make_record(i) for i in range(50)]
        a = split(records, 0.75, seed=1)
        b = split(records, 0.75, seed=1)
        c = split(records, 0.75, seed=2)
        assert a.train_ids() == b.train_ids()
        assert a.train_ids() != c.train_ids()
        assert set(a.train_ids()).isdisjoint(a.test_ids())
        assert sorted(a.train_ids() + a.test_ids()) == list(range(50))
        assert len(a.train) == math.floor(0.75 * 50)

    def test_rejects_bad_fraction_and_empty_input(self):
        with pytest.raises(ValueError):
            split([make_record(1)], 1.0, seed=0)
        with pytest.raises(EmptyCorpusError):
            split([], 0.5, seed=0)


class TestSummaries:
    def test_summarize(self, small_records):
        stats = summarize(small_records)
        assert stats.row_count == 5
        assert list(stats.condition_drug_counts.items()) == [("Depression", 2), ("Pain", 2), ("Insomnia", 1)]
        assert stats.rating_histogram == [0, 1, 1, 0, 0, 0, 0, 1, 1, 1]
        assert stats.label_counts == {"positive": 3, "negative": 2}
        assert stats.useful_count.max == 20.0
        assert stats.useful_count.min == 0.0

    def test_totals_match_row_count_on_generated_corpora(self):
        for seed in range(25):
            n_rows = 1 + (seed * 37) % 400
            records = parse_tsv(tsv_bytes(generate_corpus_rows(n_rows, seed=seed))).records
            for corpus in (records, clean_corpus(records)):
                stats = summarize(corpus)
                with_condition = sum(1 for r in corpus if r.condition is not None)
                assert stats.row_count == len(corpus)
                assert sum(stats.rating_histogram) == len(corpus), f"seed {seed}"
                assert sum(stats.label_counts.values()) == len(corpus), f"seed {seed}"
                assert sum(stats.condition_review_counts.values()) == with_condition, f"seed {seed}"
                assert all(
                    0 < stats.condition_drug_counts[c] <= n for c, n in stats.condition_review_counts.items()
                )

    def test_write_stats(self, small_records, tmp_path):
        _, report = clean_corpus_with_report(small_records)
        written = write_stats(summarize(small_records, report), tmp_path)
        names = {p.name for p in written}
        assert {"stats.json", "condition_drug_counts.csv", "rating_histogram.csv", "cleaning_report.csv"} <= names
        assert all(p.exists() for p in written)


@pytest.mark.integration
def test_real_corpus_cleaning(uci_files):
    parsed = parse_files(uci_files)
    cleaned = clean_corpus(parsed.records)
    assert len(cleaned) == 212141
    labels = label_vector(cleaned)
    assert int(labels.sum()) == 148778
    assert int(len(labels) - labels.sum()) == 63363
