"""
Pipeline configuration and run manifest models.

``PipelineConfig`` is the fully-resolved configuration of a run. It is read
from a JSON file, overridden by command-line flags, and hashed into the
manifest so cached stage outputs are reused only for the same semantics.
"""

from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..utils.constants import (
    DEFAULT_MIN_DF,
    DEFAULT_MODEL_GRID,
    DEFAULT_SEED,
    DEFAULT_TOP_CONDITIONS,
    DEFAULT_TOP_N,
    DEFAULT_TRAIN_FRACTION,
    DEFAULT_WINNERS,
    EMBEDDING_DIM,
    EMBEDDING_EPOCHS,
    EMBEDDING_LEARNING_RATE,
    EMBEDDING_NEGATIVES,
    EMBEDDING_WINDOW,
    SMOTE_COARSE_FEATURES,
    SMOTE_K_NEIGHBORS,
    SMOTE_TARGET_RATIO,
    Representation,
)
from ..utils.exceptions import ConfigError
from ..utils.io import config_hash, read_json
from .classifier import Algorithm, TrainConfig, default_train_config

# Fields that do not change any artifact's content
NON_SEMANTIC_FIELDS = {"output_dir", "max_workers"}


class SmoteConfig(BaseModel):
    """SMOTE parameters for one resampling call."""

    model_config = ConfigDict(frozen=True)

    k_neighbors: int = Field(SMOTE_K_NEIGHBORS, ge=1)
    target_ratio: float = Field(SMOTE_TARGET_RATIO, gt=0, le=1)
    seed: int = 0


class SmoteSettings(BaseModel):
    """SMOTE options of a pipeline run; the run seed is used for sampling."""

    enabled: bool = True
    k_neighbors: int = Field(SMOTE_K_NEIGHBORS, ge=1)
    target_ratio: float = Field(SMOTE_TARGET_RATIO, gt=0, le=1)
    coarse_features: Optional[int] = Field(
        SMOTE_COARSE_FEATURES, ge=1, description="Highest-idf columns used for sparse neighbour search"
    )
    coarse_min_rows: int = Field(
        20000, ge=0, description="Sparse neighbour search is exact below this many minority rows"
    )

    def for_seed(self, seed: int) -> SmoteConfig:
        return SmoteConfig(k_neighbors=self.k_neighbors, target_ratio=self.target_ratio, seed=seed)


class SparseSettings(BaseModel):
    ngram_range: Tuple[int, int] = (1, 2)
    min_df: int = Field(DEFAULT_MIN_DF, ge=1)
    export_coordinates: bool = Field(False, description="Also write matrices as coordinate text")

    @field_validator("ngram_range")
    @classmethod
    def ordered_range(cls, v):
        low, high = v
        if not 1 <= low <= high:
            raise ValueError(f"ngram range must satisfy 1 <= low <= high, got {v}")
        return v


class EmbeddingSettings(BaseModel):
    dimension: int = Field(EMBEDDING_DIM, ge=1)
    window: int = Field(EMBEDDING_WINDOW, ge=1)
    negatives: int = Field(EMBEDDING_NEGATIVES, ge=1)
    epochs: int = Field(EMBEDDING_EPOCHS, ge=1)
    learning_rate: float = Field(EMBEDDING_LEARNING_RATE, gt=0)
    min_count: int = Field(1, ge=1)
    fast: bool = Field(False, description="Threaded lock-free training; not reproducible")


class Divisor(str, Enum):
    """What a drug's overall score is divided by to get its final score."""
    DRUG_COUNT = "drug_count"
    REVIEW_COUNT = "review_count"
    NONE = "none"


class RecommendSettings(BaseModel):
    divisor: Divisor = Divisor.DRUG_COUNT
    top_n: int = Field(DEFAULT_TOP_N, ge=1)
    n_conditions: int = Field(DEFAULT_TOP_CONDITIONS, ge=1)


class PipelineConfig(BaseModel):
    """Fully-resolved configuration of a pipeline run."""

    inputs: List[Path] = Field(default_factory=list, description="TSV files, concatenated in order")
    output_dir: Path = Field(Path("./artifacts"))
    seed: int = DEFAULT_SEED
    train_fraction: float = Field(DEFAULT_TRAIN_FRACTION, gt=0, lt=1)
    smote: SmoteSettings = Field(default_factory=SmoteSettings)
    sparse: SparseSettings = Field(default_factory=SparseSettings)
    embedding: EmbeddingSettings = Field(default_factory=EmbeddingSettings)
    model_grid: Dict[Representation, List[Algorithm]] = Field(
        default_factory=lambda: {Representation(k): [Algorithm(a) for a in v] for k, v in DEFAULT_MODEL_GRID.items()}
    )
    train_overrides: Dict[Algorithm, Dict[str, Any]] = Field(default_factory=dict)
    winners: List[Tuple[Representation, Algorithm]] = Field(
        default_factory=lambda: [(Representation(r), Algorithm(a)) for r, a in DEFAULT_WINNERS]
    )
    recommend: RecommendSettings = Field(default_factory=RecommendSettings)
    max_workers: int = Field(1, ge=1)

    @field_validator("train_overrides")
    @classmethod
    def overrides_are_valid(cls, v):
        for algorithm, values in v.items():
            try:
                TrainConfig(**values)
            except ValueError as e:
                raise ValueError(f"invalid overrides for {algorithm.value}: {e}")
        return v

    @model_validator(mode="after")
    def winners_are_distinct(self):
        if len(set(self.winners)) != len(self.winners):
            raise ValueError("winner pairs must be distinct")
        return self

    @classmethod
    def from_file(cls, path: Path) -> "PipelineConfig":
        """Load a JSON config file."""
        try:
            return cls.model_validate(read_json(path))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except ValueError as e:
            raise ConfigError(f"invalid config {path}: {e}")

    def with_overrides(self, **updates: Any) -> "PipelineConfig":
        """A validated copy with the given top-level fields replaced; None values are ignored."""
        data = self.model_dump()
        data.update({k: v for k, v in updates.items() if v is not None})
        try:
            return type(self).model_validate(data)
        except ValueError as e:
            raise ConfigError(f"invalid configuration: {e}")

    def train_config(self, algorithm: Algorithm) -> TrainConfig:
        return default_train_config(algorithm, seed=self.seed, **self.train_overrides.get(Algorithm(algorithm), {}))

    def training_jobs(self) -> List[Tuple[Representation, Algorithm]]:
        """Every (representation, algorithm) pair to fit: the grid plus the winners, without repeats."""
        jobs: List[Tuple[Representation, Algorithm]] = []
        for rep in Representation:
            for algorithm in self.model_grid.get(rep, []):
                jobs.append((rep, algorithm))
        for pair in self.winners:
            if pair not in jobs:
                jobs.append(pair)
        return jobs

    def semantic_hash(self) -> str:
        """SHA-256 over the canonical JSON of every field that affects outputs."""
        return config_hash(self.model_dump(mode="json", exclude=NON_SEMANTIC_FIELDS))


class StageRecord(BaseModel):
    """One completed stage in the run manifest."""

    stage: str
    config_hash: str
    timestamp: str
    outputs: List[str] = Field(default_factory=list)


class Manifest(BaseModel):
    """Completed stages of the run in an output directory."""

    stages: Dict[str, StageRecord] = Field(default_factory=dict)
