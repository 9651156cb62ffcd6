"""
Shared fixtures: review records, TSV byte builders and a synthetic corpus
shaped like the UCI drug review files.
"""

import datetime as dt
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import numpy as np
import pytest

from src.models.review import ReviewRecord
from src.utils.constants import TSV_COLUMNS

HEADER = "\t".join([""] + TSV_COLUMNS[1:])

CONDITIONS = {
    "Birth Control": ["Ethinyl estradiol", "Levonorgestrel", "Etonogestrel", "Norethindrone"],
    "Depression": ["Sertraline", "Bupropion", "Escitalopram", "Venlafaxine", "Fluoxetine"],
    "Pain": ["Tramadol", "Oxycodone", "Ibuprofen"],
    "Anxiety": ["Buspirone", "Lorazepam", "Hydroxyzine"],
    "Acne": ["Doxycycline", "Tretinoin", "Spironolactone"],
    "Insomnia": ["Zolpidem", "Trazodone"],
    "Migraine": ["Sumatriptan", "Topiramate", "Rizatriptan"],
    "Obesity": ["Phentermine", "Contrave"],
}

POSITIVE_WORDS = ["great", "excellent", "helpful", "relief", "effective", "amazing", "happy", "better", "recommend"]
NEGATIVE_WORDS = ["terrible", "awful", "worse", "nausea", "headaches", "horrible", "useless", "dizzy", "sick"]
NEUTRAL_WORDS = ["doctor", "weeks", "months", "dose", "started", "taking", "morning", "night", "pills", "day"]
MONTHS = ["January", "February", "March", "April", "May", "June", "July",
          "August", "September", "October", "November", "December"]


def make_record(
    unique_id: int = 1,
    drug_name: str = "Sertraline",
    condition: Optional[str] = "Depression",
    review_text: str = "It works great for me.",
    rating: int = 9,
    date: dt.date = dt.date(2015, 5, 20),
    useful_count: int = 10,
) -> ReviewRecord:
    return ReviewRecord(
        unique_id=unique_id,
        drug_name=drug_name,
        condition=condition,
        review_text=review_text,
        rating=rating,
        date=date,
        useful_count=useful_count,
    )


def tsv_bytes(rows: Sequence[Sequence[object]], header: str = HEADER) -> bytes:
    """UCI-style TSV bytes; the review column is double quoted."""
    lines = [header]
    for row in rows:
        cells = [str(v) for v in row]
        cells[3] = '"' + cells[3].replace('"', '""') + '"'
        lines.append("\t".join(cells))
    return ("\n".join(lines) + "\n").encode("utf-8")


def synthetic_review(rng: np.random.Generator, positive: bool) -> str:
    pool = POSITIVE_WORDS if positive else NEGATIVE_WORDS
    other = NEGATIVE_WORDS if positive else POSITIVE_WORDS
    words = []
    for _ in range(int(rng.integers(8, 30))):
        roll = rng.random()
        if roll < 0.35:
            words.append(pool[int(rng.integers(len(pool)))])
        elif roll < 0.42:
            words.append(other[int(rng.integers(len(other)))])
        else:
            words.append(NEUTRAL_WORDS[int(rng.integers(len(NEUTRAL_WORDS)))])
    words[0] = words[0].capitalize()
    if rng.random() < 0.2:
        words.insert(1, "NOT" if not positive else "REALLY")
    return " ".join(words) + ("!" if positive else ".") + " I&#039;m done."


def generate_corpus_rows(n_rows: int = 2000, seed: int = 7, with_junk: bool = True) -> List[List[object]]:
    """
    Rows of a synthetic corpus: about 70% positive ratings, review words
    correlated with the label, a handful of null and junk conditions.
    """
    rng = np.random.default_rng(seed)
    names = sorted(CONDITIONS)
    weights = np.array([len(CONDITIONS[c]) for c in names], dtype=np.float64) ** 1.5
    weights /= weights.sum()
    rows: List[List[object]] = []
    for i in range(n_rows):
        condition = names[int(rng.choice(len(names), p=weights))]
        drugs = CONDITIONS[condition]
        drug = drugs[int(rng.integers(len(drugs)))]
        positive = rng.random() < 0.7
        rating = int(rng.integers(6, 11)) if positive else int(rng.integers(1, 6))
        date = f"{MONTHS[int(rng.integers(12))]} {int(rng.integers(1, 29))}, {int(rng.integers(2008, 2018))}"
        useful = int(rng.integers(0, 200))
        rating_text = f"{rating}.0" if i % 5 == 0 else str(rating)
        if with_junk and i % 97 == 13:
            condition = ""
        elif with_junk and i % 131 == 17:
            condition = f"{useful}</span> users found this comment helpful."
        rows.append([100000 + i, drug, condition, synthetic_review(rng, positive), rating_text, date, useful])
    return rows


@pytest.fixture
def record_factory() -> Callable[..., ReviewRecord]:
    return make_record


@pytest.fixture
def small_records() -> List[ReviewRecord]:
    return [
        make_record(1, "Sertraline", "Depression", "This drug worked great, I feel happy.", 9, dt.date(2016, 3, 1), 20),
        make_record(2, "Bupropion", "Depression", "Terrible side effects, awful headaches.", 2, dt.date(2015, 7, 14), 5),
        make_record(3, "Tramadol", "Pain", "Good relief from the pain.", 8, dt.date(2012, 1, 30), 0),
        make_record(4, "Ibuprofen", "Pain", "Did not help at all.", 3, dt.date(2017, 11, 2), 12),
        make_record(5, "Zolpidem", "Insomnia", "I sleep well now.", 10, dt.date(2014, 6, 6), 7),
    ]


@pytest.fixture
def corpus_file(tmp_path: Path) -> Path:
    """A 2,000-row synthetic corpus written as a UCI-style TSV."""
    path = tmp_path / "drugs_fixture.tsv"
    path.write_bytes(tsv_bytes(generate_corpus_rows(2000, seed=7)))
    return path


@pytest.fixture
def cli_env(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    """Point log files and the default output directory into the test directory."""
    monkeypatch.setenv("DRUGREC_LOG_FILE", str(tmp_path / "logs" / "drugrec.log"))
    monkeypatch.setenv("DRUGREC_OUTPUT_DIR", str(tmp_path / "artifacts"))
    monkeypatch.setenv("DRUGREC_LOG_LEVEL", "WARNING")
    monkeypatch.setenv("DRUGREC_MAX_WORKERS", "1")
    return tmp_path


UCI_FILES = ("drugsComTrain_raw.tsv", "drugsComTest_raw.tsv")


@pytest.fixture(scope="session")
def uci_files() -> List[Path]:
    """The real UCI train/test files; skips unless DRUGREC_UCI_DIR points at them."""
    from config.settings import Settings

    uci_dir = Settings().uci_dir
    if uci_dir is None:
        pytest.skip("DRUGREC_UCI_DIR is not set")
    paths = [Path(uci_dir) / name for name in UCI_FILES]
    missing = [str(p) for p in paths if not p.exists()]
    if missing:
        pytest.skip(f"UCI files not found: {', '.join(missing)}")
    return paths
