"""
Drug review corpus loading, cleaning, labeling, splitting and summaries.

The UCI drugsCom files are tab separated with a header row. Reviews are
double quoted, may span several physical lines and carry HTML entities
(``&quot;``, ``&#039;``). Parsing never drops a bad row silently: every
row that fails validation comes back as a ``RowError`` with the physical
line it started on.
"""

import html
import io
from pathlib import Path
from typing import BinaryIO, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import ValidationError

from .models.review import (
    CleaningReport,
    CorpusSplit,
    CorpusStats,
    ParsedCorpus,
    ReviewRecord,
    Sentiment,
    UsefulCountSummary,
)
from .utils.constants import (
    JUNK_CONDITION_MARKER,
    POSITIVE_RATING_THRESHOLD,
    RATING_MAX,
    RATING_MIN,
    TSV_COLUMNS,
    UNNAMED_ID_COLUMNS,
)
from .utils.exceptions import CorpusFormatError, EmptyCorpusError, LabelError, RowError
from .utils.io import write_csv, write_json

JUNK_MARKERS: Tuple[str, ...] = (JUNK_CONDITION_MARKER, "users found this comment helpful")

_FIELD_NAMES = {
    "uniqueID": "unique_id",
    "drugName": "drug_name",
    "condition": "condition",
    "review": "review_text",
    "rating": "rating",
    "date": "date",
    "usefulCount": "useful_count",
}

TsvSource = Union[bytes, bytearray, BinaryIO, str, Path]


def _open_source(source: TsvSource) -> BinaryIO:
    if isinstance(source, (bytes, bytearray)):
        return io.BytesIO(bytes(source))
    if isinstance(source, (str, Path)):
        return open(source, "rb")
    return source


def _check_header(columns: Sequence[str]) -> None:
    columns = [str(c).strip() for c in columns]
    expected = TSV_COLUMNS[1:]
    if len(columns) != len(TSV_COLUMNS) or columns[0] not in UNNAMED_ID_COLUMNS or columns[1:] != expected:
        raise CorpusFormatError(
            f"missing or unexpected header: got {columns}, expected {TSV_COLUMNS}"
        )


def _format_validation_error(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(part) for part in err.get("loc", ()))
        parts.append(f"{loc}: {err.get('msg', 'invalid')}")
    return "; ".join(parts)


def parse_tsv(source: TsvSource) -> ParsedCorpus:
    """
    Parse a UCI drug review TSV into validated records.

    Args:
        source: Raw bytes, a binary stream or a path to the file

    Returns:
        ParsedCorpus holding the valid records in file order and one RowError per bad row

    Raises:
        CorpusFormatError: If the header is missing or the file structure is broken
    """
    stream = _open_source(source)
    close = isinstance(source, (str, Path))
    try:
        frame = pd.read_csv(
            stream,
            sep="\t",
            dtype=str,
            keep_default_na=False,
            na_filter=False,
            quotechar='"',
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        raise CorpusFormatError("empty input: missing header row")
    except pd.errors.ParserError as e:
        raise CorpusFormatError(f"malformed TSV structure: {e}")
    finally:
        if close:
            stream.close()

    _check_header(frame.columns)
    frame.columns = TSV_COLUMNS
    frame = frame.fillna("")

    # Physical line each row starts on: header is line 1, quoted fields may hold newlines
    newlines = sum(frame[col].str.count("\n") for col in TSV_COLUMNS).to_numpy()
    row_heights = newlines + 1
    start_lines = 2 + np.concatenate(([0], np.cumsum(row_heights)[:-1])) if len(frame) else []

    records: List[ReviewRecord] = []
    errors: List[RowError] = []
    for line, row in zip(start_lines, frame.itertuples(index=False, name=None)):
        values = dict(zip(TSV_COLUMNS, row))
        missing = [c for c in ("uniqueID", "drugName", "rating", "date", "usefulCount") if not values[c].strip()]
        if missing:
            errors.append(RowError(int(line), f"missing field(s): {', '.join(missing)}", values["uniqueID"] or None))
            continue
        payload = {_FIELD_NAMES[c]: values[c] for c in TSV_COLUMNS}
        payload["review_text"] = html.unescape(payload["review_text"])
        payload["drug_name"] = html.unescape(payload["drug_name"])
        payload["condition"] = html.unescape(payload["condition"])
        try:
            records.append(ReviewRecord.model_validate(payload))
        except ValidationError as e:
            errors.append(RowError(int(line), _format_validation_error(e), values["uniqueID"]))

    for err in errors[:20]:
        logger.warning(f"Skipping malformed row at {err}")
    if len(errors) > 20:
        logger.warning(f"... and {len(errors) - 20} more malformed rows")
    logger.info(f"Parsed {len(records)} records ({len(errors)} row errors)")
    return ParsedCorpus(records=records, errors=errors)


def parse_files(paths: Iterable[Union[str, Path]]) -> ParsedCorpus:
    """Parse several TSV files and concatenate them in the given order."""
    records: List[ReviewRecord] = []
    errors: List[RowError] = []
    for path in paths:
        logger.info(f"Reading {path}")
        parsed = parse_tsv(Path(path))
        records.extend(parsed.records)
        errors.extend(parsed.errors)
    return ParsedCorpus(records=records, errors=errors)


def is_junk_condition(condition: str, markers: Sequence[str] = JUNK_MARKERS) -> bool:
    """Whether a condition value is a scraping artifact rather than an ailment."""
    return any(marker in condition for marker in markers)


def clean_corpus_with_report(
    records: Sequence[ReviewRecord],
    junk_markers: Sequence[str] = JUNK_MARKERS,
) -> Tuple[List[ReviewRecord], CleaningReport]:
    """
    Drop null and junk conditions and duplicate ids, keeping input order.

    Args:
        records: Parsed records
        junk_markers: Substrings that mark a condition as meaningless

    Returns:
        The cleaned records and the per-rule removal counts
    """
    report = CleaningReport(input_rows=len(records))
    seen: set = set()
    cleaned: List[ReviewRecord] = []
    for record in records:
        if record.condition is None:
            report.null_condition += 1
            continue
        if is_junk_condition(record.condition, junk_markers):
            report.junk_condition += 1
            continue
        if record.unique_id in seen:
            report.duplicate_id += 1
            continue
        seen.add(record.unique_id)
        cleaned.append(record)
    report.output_rows = len(cleaned)
    logger.info(
        f"Cleaned corpus: {report.input_rows} -> {report.output_rows} rows "
        f"(null condition {report.null_condition}, junk condition {report.junk_condition}, "
        f"duplicate id {report.duplicate_id})"
    )
    return cleaned, report


def clean_corpus(records: Sequence[ReviewRecord]) -> List[ReviewRecord]:
    """Drop rows with absent or junk conditions and duplicate ids."""
    cleaned, _ = clean_corpus_with_report(records)
    return cleaned


def derive_label(rating: int) -> Sentiment:
    """
    Label a review from its rating: 6-10 is positive, 1-5 negative.

    Raises:
        LabelError: If the rating is outside 1-10
    """
    if isinstance(rating, bool) or not isinstance(rating, (int, np.integer)):
        raise LabelError(f"rating must be an integer, got {rating!r}")
    if not RATING_MIN <= rating <= RATING_MAX:
        raise LabelError(f"rating {rating} outside {RATING_MIN}-{RATING_MAX}")
    return Sentiment.POSITIVE if rating >= POSITIVE_RATING_THRESHOLD else Sentiment.NEGATIVE


def label_vector(records: Sequence[ReviewRecord]) -> np.ndarray:
    """Labels as an int8 array, 1 = positive, 0 = negative."""
    return np.fromiter(
        (derive_label(r.rating).as_int for r in records), dtype=np.int8, count=len(records)
    )


def split(records: Sequence[ReviewRecord], train_fraction: float, seed: int) -> CorpusSplit:
    """
    Shuffle the corpus with a seeded permutation and cut it into train and test.

    The first floor(train_fraction * n) permuted rows form the training set.
    Using the same seed for every feature representation gives identical membership.

    Raises:
        ValueError: If train_fraction is not strictly between 0 and 1
        EmptyCorpusError: If there are no records
    """
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(records)
    if n == 0:
        raise EmptyCorpusError("cannot split an empty corpus")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_train = int(np.floor(train_fraction * n))
    train = tuple(records[i] for i in order[:n_train])
    test = tuple(records[i] for i in order[n_train:])
    logger.info(f"Split {n} rows into {len(train)} train / {len(test)} test (seed {seed})")
    return CorpusSplit(train=train, test=test, seed=seed, train_fraction=train_fraction)


def records_frame(records: Sequence[ReviewRecord]) -> pd.DataFrame:
    """Records as a DataFrame with the model's field names as columns."""
    columns = list(ReviewRecord.model_fields)
    if not records:
        return pd.DataFrame(columns=columns)
    return pd.DataFrame([r.model_dump() for r in records], columns=columns)


def summarize(
    records: Sequence[ReviewRecord],
    cleaning: Optional[CleaningReport] = None,
) -> CorpusStats:
    """
    Summarize a corpus: distinct drugs per condition, rating histogram,
    label counts and the spread of useful counts.
    """
    frame = records_frame(records)
    histogram = [0] * RATING_MAX
    if frame.empty:
        return CorpusStats(row_count=0, rating_histogram=histogram, cleaning=cleaning)

    counts = frame["rating"].value_counts()
    for rating, count in counts.items():
        histogram[int(rating) - 1] = int(count)

    with_condition = frame.dropna(subset=["condition"])
    drug_counts = with_condition.groupby("condition")["drug_name"].nunique()
    review_counts = with_condition.groupby("condition").size()

    labels = label_vector(records)
    useful = frame["useful_count"].astype(float)
    std = float(useful.std()) if len(useful) > 1 else 0.0

    stats = CorpusStats(
        row_count=len(frame),
        condition_drug_counts=_sorted_counts(drug_counts),
        condition_review_counts=_sorted_counts(review_counts),
        rating_histogram=histogram,
        label_counts={
            Sentiment.POSITIVE.value: int(labels.sum()),
            Sentiment.NEGATIVE.value: int(len(labels) - labels.sum()),
        },
        useful_count=UsefulCountSummary(
            min=float(useful.min()),
            max=float(useful.max()),
            mean=float(useful.mean()),
            std=std,
        ),
        cleaning=cleaning,
    )
    return stats


def _sorted_counts(series: pd.Series) -> Dict[str, int]:
    # count descending, then name ascending
    items = sorted(((str(k), int(v)) for k, v in series.items()), key=lambda kv: (-kv[1], kv[0]))
    return dict(items)


def stats_frames(stats: CorpusStats) -> Dict[str, pd.DataFrame]:
    """Tabular views of the stats, one DataFrame per emitted CSV."""
    frames = {
        "condition_drug_counts": pd.DataFrame(
            list(stats.condition_drug_counts.items()), columns=["condition", "drug_count"]
        ),
        "condition_review_counts": pd.DataFrame(
            list(stats.condition_review_counts.items()), columns=["condition", "review_count"]
        ),
        "rating_histogram": pd.DataFrame(
            {"rating": list(range(RATING_MIN, RATING_MAX + 1)), "count": stats.rating_histogram}
        ),
        "label_counts": pd.DataFrame(
            list(stats.label_counts.items()), columns=["label", "count"]
        ),
        "useful_count_summary": pd.DataFrame([stats.useful_count.model_dump()]),
    }
    if stats.cleaning is not None:
        frames["cleaning_report"] = pd.DataFrame([stats.cleaning.model_dump()])
    return frames


def write_stats(stats: CorpusStats, out_dir: Union[str, Path], prefix: str = "") -> List[Path]:
    """Write the stats as one JSON document plus one CSV per table."""
    out = Path(out_dir)
    written = [write_json(out / f"{prefix}stats.json", stats.model_dump(mode="json"))]
    for name, frame in stats_frames(stats).items():
        written.append(write_csv(out / f"{prefix}{name}.csv", frame))
    return written
