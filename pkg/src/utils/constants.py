"""
Drug review corpus constants: file columns, feature layouts, defaults and model groupings.
"""

from typing import Dict, List, Tuple
from enum import Enum


class Representation(str, Enum):
    """Feature representations a model can be trained on."""
    BOW = "bow"
    TFIDF = "tfidf"
    WORD2VEC = "word2vec"
    MANUAL = "manual"


SPARSE_REPRESENTATIONS = [Representation.BOW, Representation.TFIDF]
DENSE_REPRESENTATIONS = [Representation.WORD2VEC, Representation.MANUAL]

# UCI drugsCom TSV columns, in file order. The raw files leave the first header cell empty.
TSV_COLUMNS = ["uniqueID", "drugName", "condition", "review", "rating", "date", "usefulCount"]
UNNAMED_ID_COLUMNS = {"", "Unnamed: 0", "uniqueID"}

# Condition values left behind by the scraper, e.g. "3</span> users found this comment helpful."
JUNK_CONDITION_MARKER = "</span>"

# Native corpus date format ("May 20, 2009"); ISO-8601 is accepted as well
NATIVE_DATE_FORMAT = "%B %d, %Y"

RATING_MIN = 1
RATING_MAX = 10
POSITIVE_RATING_THRESHOLD = 6

# Separator joining tokens of an n-gram; tokens never contain it
NGRAM_SEPARATOR = "␟"
DEFAULT_NGRAM_RANGE: Tuple[int, int] = (1, 2)
DEFAULT_MIN_DF = 2

# Word2Vec defaults
EMBEDDING_DIM = 100
EMBEDDING_WINDOW = 5
EMBEDDING_NEGATIVES = 5
EMBEDDING_EPOCHS = 5
EMBEDDING_LEARNING_RATE = 0.025
EMBEDDING_MIN_LEARNING_RATE = 0.0001 * EMBEDDING_LEARNING_RATE
NEGATIVE_SAMPLING_POWER = 0.75

NEGATORS = frozenset({"not", "no", "never", "n't"})

# Manual feature layout, in vector order
TEXT_STAT_FEATURES = [
    "punctuation_count",
    "word_count",
    "stopword_count",
    "letter_count",
    "unique_word_count",
    "mean_word_length",
    "uppercase_word_count",
    "title_word_count",
]
MANUAL_FEATURES = [
    "useful_count",
    "condition_code",
    "day",
    "month",
    "year",
    "polarity_clean",
    "polarity_raw",
] + TEXT_STAT_FEATURES
UNSEEN_CONDITION_CODE = -1

# SMOTE defaults
SMOTE_K_NEIGHBORS = 5
SMOTE_TARGET_RATIO = 0.7
SMOTE_COARSE_FEATURES = 512

DEFAULT_SEED = 42
DEFAULT_TRAIN_FRACTION = 0.75

# Model grid per representation, following the result tables
DEFAULT_MODEL_GRID: Dict[str, List[str]] = {
    Representation.BOW.value: [
        "logistic_regression", "perceptron", "ridge", "multinomial_nb", "sgd_hinge", "linear_svc"
    ],
    Representation.TFIDF.value: [
        "logistic_regression", "perceptron", "ridge", "multinomial_nb", "sgd_hinge", "linear_svc"
    ],
    Representation.WORD2VEC.value: ["decision_tree", "random_forest", "gbdt"],
    Representation.MANUAL.value: ["decision_tree", "random_forest", "gbdt"],
}

# Winner pairs combined by the recommender
DEFAULT_WINNERS: List[Tuple[str, str]] = [
    (Representation.BOW.value, "perceptron"),
    (Representation.TFIDF.value, "linear_svc"),
    (Representation.WORD2VEC.value, "gbdt"),
    (Representation.MANUAL.value, "random_forest"),
]

DEFAULT_TOP_N = 4
DEFAULT_TOP_CONDITIONS = 5
