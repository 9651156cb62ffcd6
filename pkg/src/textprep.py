"""
Review text preprocessing.

The chain joins condition, drug name and review text, strips HTML tags,
URLs, punctuation and quotes, lowercases, tokenizes on whitespace,
removes stopwords and reduces tokens to a base form. Every step is a pure
function of its input; the shipped lexicons under ``src/data`` pin the
stopword list and the lemma exception table.
"""

import re
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Union

from loguru import logger

from .models.review import ProcessedDoc, ReviewRecord

DATA_DIR = Path(__file__).parent / "data"
STOPWORDS_FILE = DATA_DIR / "stopwords.txt"
LEMMA_EXCEPTIONS_FILE = DATA_DIR / "lemma_exceptions.txt"

_TAG_RE = re.compile(r"<[^>]*>")
_URL_RE = re.compile(r"(?:\b[a-z][a-z0-9+.\-]*://|\bwww\.)\S*")
_PUNCT_RE = re.compile(r"[^\w\s]|_")
_SPACE_RE = re.compile(r"\s+")

_VOWELS = frozenset("aeiouy")
_KEEP_DOUBLE = frozenset("lszf")


def _read_entries(path: Union[str, Path]) -> List[str]:
    entries = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith("#"):
                entries.append(line)
    return entries


@lru_cache(maxsize=8)
def load_stopwords(path: Union[str, Path] = STOPWORDS_FILE) -> FrozenSet[str]:
    """Load a stopword lexicon, one lowercase word per line."""
    words = frozenset(entry.lower() for entry in _read_entries(path))
    logger.debug(f"Loaded {len(words)} stopwords from {path}")
    return words


def clean_text(raw: str) -> str:
    """
    Normalize raw review text.

    HTML tags and URLs are removed, punctuation and quote characters become
    single spaces, the text is lowercased and whitespace collapsed.
    """
    if not raw:
        return ""
    text = raw.lower()
    text = _TAG_RE.sub(" ", text)
    text = _URL_RE.sub(" ", text)
    text = _PUNCT_RE.sub(" ", text)
    return _SPACE_RE.sub(" ", text).strip()


def tokenize(cleaned: str) -> List[str]:
    """Split cleaned text on whitespace."""
    return cleaned.split()


def remove_stopwords(tokens: Iterable[str], stopwords: Optional[FrozenSet[str]] = None) -> List[str]:
    """Drop tokens found in the stopword lexicon, keeping order."""
    lexicon = load_stopwords() if stopwords is None else stopwords
    return [t for t in tokens if t not in lexicon]


class Lemmatizer:
    """
    Rule-based lemmatizer: an irregular-form exception table plus suffix rules
    for plurals and -ing / -ed / -er endings.

    This approximates a dictionary lemmatizer. Rules only ever shorten a token
    and every exception base must be stable, so applying the rules until
    nothing changes always terminates and lands on a fixed point.
    """

    def __init__(self, exceptions: Optional[Dict[str, str]] = None):
        self.exceptions: Dict[str, str] = dict(exceptions) if exceptions is not None else {}
        unstable = [f"{form}->{base}" for form, base in self.exceptions.items()
                    if self._lemma_once(base) != base]
        if unstable:
            raise ValueError(f"lemma exception bases are not stable: {', '.join(unstable[:10])}")
        self._cache: Dict[str, str] = {}

    @classmethod
    def from_file(cls, path: Union[str, Path] = LEMMA_EXCEPTIONS_FILE) -> "Lemmatizer":
        exceptions = {}
        for entry in _read_entries(path):
            form, base = entry.split()
            exceptions[form.lower()] = base.lower()
        return cls(exceptions)

    @staticmethod
    def _undouble(stem: str) -> str:
        if len(stem) >= 2 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS and stem[-1] not in _KEEP_DOUBLE:
            return stem[:-1]
        return stem

    @staticmethod
    def _has_vowel(stem: str) -> bool:
        return any(ch in _VOWELS for ch in stem)

    def _lemma_once(self, token: str) -> str:
        if token in self.exceptions:
            return self.exceptions[token]
        if not token.isalpha():
            return token  # numerals and dosages stay as they are

        n = len(token)
        if n > 4 and token.endswith("ies"):
            return token[:-3] + "y"
        if n > 4 and token.endswith("ied"):
            return token[:-3] + "y"
        if n > 5 and token.endswith("ier"):
            return token[:-3] + "y"
        if token.endswith("sses"):
            return token[:-2]
        if token.endswith(("xes", "shes", "zzes", "tches")):
            return token[:-2]
        if n > 3 and token.endswith("s") and not token.endswith(("ss", "us", "is")):
            return token[:-1]
        if token.endswith("ing"):
            stem = token[:-3]
            if len(stem) >= 3 and self._has_vowel(stem):
                return self._undouble(stem)
        if token.endswith("ed") and not token.endswith("eed"):
            stem = token[:-2]
            if len(stem) >= 3 and self._has_vowel(stem):
                return self._undouble(stem)
        if token.endswith("er"):
            stem = token[:-2]
            if len(stem) >= 4 and self._has_vowel(stem) and stem[-1] != stem[-2]:
                return stem
        return token

    def lemmatize_token(self, token: str) -> str:
        """Base form of one lowercase token."""
        cached = self._cache.get(token)
        if cached is not None:
            return cached
        current = token
        while True:
            nxt = self._lemma_once(current)
            if nxt == current:
                break
            current = nxt
        self._cache[token] = current
        return current

    def __call__(self, tokens: Iterable[str]) -> List[str]:
        return [self.lemmatize_token(t) for t in tokens]


@lru_cache(maxsize=1)
def default_lemmatizer() -> Lemmatizer:
    return Lemmatizer.from_file()


def lemmatize(tokens: Iterable[str], lemmatizer: Optional[Lemmatizer] = None) -> List[str]:
    """Map each token to its base form."""
    return (lemmatizer or default_lemmatizer())(tokens)


def combine_fields(record: ReviewRecord) -> str:
    """Condition, drug name and review joined by single spaces."""
    return " ".join([record.condition or "", record.drug_name, record.review_text])


def preprocess_review(
    record: ReviewRecord,
    stopwords: Optional[FrozenSet[str]] = None,
    lemmatizer: Optional[Lemmatizer] = None,
) -> ProcessedDoc:
    """
    Run one review through the full chain: join, clean, tokenize, drop
    stopwords, lemmatize.

    Lemmas that turn out to be stopwords ("being" -> "be") are dropped as
    well so the final tokens never contain a stopword.
    """
    lexicon = load_stopwords() if stopwords is None else stopwords
    combined = combine_fields(record)
    cleaned = clean_text(combined)
    tokens = remove_stopwords(lemmatize(remove_stopwords(tokenize(cleaned), lexicon), lemmatizer), lexicon)
    return ProcessedDoc(
        record_id=record.unique_id,
        raw_text=record.review_text,
        combined_text=combined,
        cleaned_text=cleaned,
        tokens=tuple(tokens),
    )


def preprocess_corpus(
    records: Sequence[ReviewRecord],
    max_workers: int = 1,
    stopwords: Optional[FrozenSet[str]] = None,
    lemmatizer: Optional[Lemmatizer] = None,
) -> List[ProcessedDoc]:
    """Preprocess many reviews, preserving input order."""
    lexicon = load_stopwords() if stopwords is None else stopwords
    lemma = lemmatizer or default_lemmatizer()
    if max_workers <= 1 or len(records) < 1000:
        docs = [preprocess_review(r, lexicon, lemma) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            docs = list(executor.map(lambda r: preprocess_review(r, lexicon, lemma), records, chunksize=512))
    logger.info(f"Preprocessed {len(docs)} reviews")
    return docs
