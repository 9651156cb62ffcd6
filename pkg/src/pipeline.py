"""
Stage orchestration for the drug review pipeline.

Stages read and write artifacts under one output directory:

- ``stats``: corpus summaries of the cleaned corpus (``stats/``)
- ``prep``: cleaning, train/test split and text preprocessing (``prep/``)
- ``featurize``: one representation's train/test matrices, SMOTE-balanced
  training rows and the fitted feature model (``features/<rep>/``)
- ``train``: one fitted model per (representation, algorithm) (``models/``)
- ``evaluate``: test-set reports for every trained job (``reports/``)
- ``recommend``: winner-model votes turned into drug rankings (``recommend/``)

``manifest.json`` records the config hash, timestamp and outputs of every
completed stage. A stage whose record carries the current hash and whose
outputs all exist is skipped unless ``force`` is set.
"""

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.sparse as sp
from loguru import logger

from .corpus import clean_corpus_with_report, label_vector, parse_files, split, summarize, write_stats
from .dense_features import (
    embedding_matrix,
    fit_condition_encoder,
    manual_matrix,
    save_condition_encoder,
    save_embeddings,
    train_word2vec,
)
from .evaluate import evaluate_model, write_reports
from .learn import fit_model, load_model, save_model
from .models.classifier import Algorithm
from .models.features import LabeledMatrix, Matrix
from .models.pipeline import Manifest, PipelineConfig, StageRecord
from .models.report import EvaluationReport, RecommendationTable
from .models.review import CleaningReport, CorpusStats, ProcessedDoc, ReviewRecord
from .recommend import combine_all, normalize_usefulcount, score_drugs, scored_reviews, write_recommendations
from .resample import class_distribution, smote
from .sparse_features import (
    bow_matrix,
    export_coordinates,
    fit_tfidf,
    fit_vocabulary,
    save_vocabulary,
    tfidf_matrix,
    top_idf_columns,
)
from .textprep import preprocess_corpus
from .utils.constants import Representation
from .utils.exceptions import ConfigError, StageDependencyError
from .utils.io import atomic_write, read_json, write_csv, write_json, write_lines


class Stage(str, Enum):
    """Pipeline stages in run order."""
    STATS = "stats"
    PREP = "prep"
    FEATURIZE = "featurize"
    TRAIN = "train"
    EVALUATE = "evaluate"
    RECOMMEND = "recommend"


# stages whose records are dropped when the keyed stage re-runs
_DOWNSTREAM = {
    Stage.PREP: (Stage.FEATURIZE, Stage.TRAIN, Stage.EVALUATE, Stage.RECOMMEND),
    Stage.FEATURIZE: (Stage.TRAIN, Stage.EVALUATE, Stage.RECOMMEND),
    Stage.TRAIN: (Stage.EVALUATE, Stage.RECOMMEND),
}

MANIFEST_FILE = "manifest.json"
CONFIG_FILE = "config.json"


def model_id(representation: Representation, algorithm: Algorithm) -> str:
    return f"{Representation(representation).value}__{Algorithm(algorithm).value}"


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def save_matrix(path_stem: Path, matrix: Matrix) -> Path:
    """Write a CSR matrix as ``.npz`` or a dense array as ``.npy`` next to ``path_stem``."""
    if sp.issparse(matrix):
        target = path_stem.with_suffix(".npz")
        return atomic_write(target, lambda p: _write_npz(p, matrix))
    target = path_stem.with_suffix(".npy")
    return atomic_write(target, lambda p: _write_npy(p, np.asarray(matrix)))


def _write_npz(path: Path, matrix: Matrix) -> None:
    with open(path, "wb") as f:
        sp.save_npz(f, sp.csr_matrix(matrix), compressed=True)


def _write_npy(path: Path, array: np.ndarray) -> None:
    with open(path, "wb") as f:
        np.save(f, array, allow_pickle=False)


def load_matrix(path_stem: Path, stage: str = Stage.FEATURIZE.value) -> Matrix:
    """
    Load the matrix saved under ``path_stem`` in either format.

    Raises:
        StageDependencyError: If neither file exists
    """
    sparse_path = path_stem.with_suffix(".npz")
    if sparse_path.exists():
        return sp.load_npz(sparse_path).tocsr()
    dense_path = path_stem.with_suffix(".npy")
    if dense_path.exists():
        return np.load(dense_path, allow_pickle=False)
    raise StageDependencyError(str(dense_path), stage)


class PipelineRunner:
    """
    Runs pipeline stages against one output directory.

    Args:
        config: Fully-resolved run configuration
        force: Re-run stages even when the manifest says they are current
    """

    def __init__(self, config: PipelineConfig, force: bool = False):
        self.config = config
        self.force = force
        self.out = Path(config.output_dir)
        self.config_hash = config.semantic_hash()
        self._lock = threading.Lock()
        self.manifest = self._load_manifest()

    # Paths

    @property
    def stats_dir(self) -> Path:
        return self.out / "stats"

    @property
    def prep_dir(self) -> Path:
        return self.out / "prep"

    @property
    def models_dir(self) -> Path:
        return self.out / "models"

    @property
    def reports_dir(self) -> Path:
        return self.out / "reports"

    @property
    def recommend_dir(self) -> Path:
        return self.out / "recommend"

    def features_dir(self, representation: Representation) -> Path:
        return self.out / "features" / Representation(representation).value

    def model_path(self, representation: Representation, algorithm: Algorithm) -> Path:
        return self.models_dir / f"{model_id(representation, algorithm)}.json"

    # Manifest

    def _load_manifest(self) -> Manifest:
        path = self.out / MANIFEST_FILE
        if not path.exists():
            return Manifest()
        try:
            return Manifest.model_validate(read_json(path))
        except (ValueError, json.JSONDecodeError) as e:
            logger.warning(f"Ignoring unreadable manifest {path}: {e}")
            return Manifest()

    def is_current(self, key: str) -> bool:
        """Whether a stage can be skipped: same config hash and every output still on disk."""
        if self.force:
            return False
        record = self.manifest.stages.get(key)
        if record is None or record.config_hash != self.config_hash:
            return False
        return all((self.out / output).exists() for output in record.outputs)

    def _record(self, key: str, stage: Stage, outputs: Sequence[Path]) -> None:
        relative = sorted(Path(p).resolve().relative_to(self.out.resolve()).as_posix() for p in outputs)
        with self._lock:
            self.manifest.stages[key] = StageRecord(
                stage=stage.value, config_hash=self.config_hash, timestamp=_utc_now(), outputs=relative
            )
            for dropped in self._downstream_keys(key, stage):
                del self.manifest.stages[dropped]
                logger.info(f"Stage {dropped} is out of date after {key}")
            write_json(self.out / MANIFEST_FILE, self.manifest.model_dump(mode="json"))
            write_json(self.out / CONFIG_FILE, self.config.model_dump(mode="json"))

    def _downstream_keys(self, key: str, stage: Stage) -> List[str]:
        later = {s.value for s in _DOWNSTREAM.get(stage, ())}
        rep = key.partition(":")[2]
        keys = []
        for other in self.manifest.stages:
            other_stage, _, suffix = other.partition(":")
            if other_stage not in later:
                continue
            if stage is Stage.FEATURIZE and other_stage == Stage.TRAIN.value and not suffix.startswith(f"{rep}__"):
                continue
            keys.append(other)
        return keys

    def _require_stage(self, key: str, stage: Stage, artifact: Path) -> None:
        """
        Check that an upstream artifact exists and was recorded under this run's config hash.

        Raises:
            StageDependencyError: If the artifact is missing, unrecorded or built under another hash
        """
        if not artifact.exists():
            raise StageDependencyError(str(artifact), stage.value)
        record = self.manifest.stages.get(key)
        if record is None or record.config_hash != self.config_hash:
            raise StageDependencyError(str(artifact), stage.value, stale=True)

    def _run_stage(self, key: str, stage: Stage, body: Callable[[], List[Path]]) -> bool:
        """Run ``body`` unless the stage is current; returns whether it ran."""
        if self.is_current(key):
            logger.info(f"Stage {key} is up to date, skipping")
            return False
        logger.info(f"Running stage {key}")
        outputs = body()
        self._record(key, stage, outputs)
        return True

    # Corpus

    def _load_corpus(self) -> Tuple[List[ReviewRecord], CleaningReport]:
        if not self.config.inputs:
            raise ConfigError("no input files given")
        for path in self.config.inputs:
            if not Path(path).exists():
                raise ConfigError(f"input file not found: {path}")
        parsed = parse_files(self.config.inputs)
        return clean_corpus_with_report(parsed.records)

    def run_stats(self) -> CorpusStats:
        """Summaries of the cleaned corpus, with the cleaning report attached."""

        def body() -> List[Path]:
            records, cleaning = self._load_corpus()
            return write_stats(summarize(records, cleaning), self.stats_dir)

        self._run_stage(Stage.STATS.value, Stage.STATS, body)
        return CorpusStats.model_validate(read_json(self.stats_dir / "stats.json"))

    def run_prep(self) -> None:
        """Clean, split and preprocess the corpus; cache both halves as JSONL."""

        def body() -> List[Path]:
            records, _ = self._load_corpus()
            parts = split(records, self.config.train_fraction, self.config.seed)
            written = []
            for name, part in (("train", parts.train), ("test", parts.test)):
                docs = preprocess_corpus(part, max_workers=self.config.max_workers)
                lines = (
                    json.dumps(
                        {"record": r.model_dump(mode="json"), "doc": d.model_dump(mode="json")},
                        sort_keys=True,
                        ensure_ascii=False,
                    )
                    for r, d in zip(part, docs)
                )
                written.append(write_lines(self.prep_dir / f"{name}.jsonl", lines))
            return written

        self._run_stage(Stage.PREP.value, Stage.PREP, body)

    def load_prep(self, name: str) -> Tuple[List[ReviewRecord], List[ProcessedDoc]]:
        """
        Records and processed docs of the ``train`` or ``test`` half.

        Raises:
            StageDependencyError: If the prep stage has not run
        """
        path = self.prep_dir / f"{name}.jsonl"
        if not path.exists():
            raise StageDependencyError(str(path), Stage.PREP.value)
        records, docs = [], []
        with open(path, "r", encoding="utf-8") as f:
            for line in f:
                if not line.strip():
                    continue
                row = json.loads(line)
                records.append(ReviewRecord.model_validate(row["record"]))
                docs.append(ProcessedDoc.model_validate(row["doc"]))
        return records, docs

    # Features

    def _build_features(self, representation: Representation) -> List[Path]:
        rep = Representation(representation)
        out = self.features_dir(rep)
        train_records, train_docs = self.load_prep("train")
        test_records, test_docs = self.load_prep("test")
        written: List[Path] = []
        coarse: Optional[np.ndarray] = None

        if rep in (Representation.BOW, Representation.TFIDF):
            settings = self.config.sparse
            vocab = fit_vocabulary(train_docs, tuple(settings.ngram_range), settings.min_df)
            tfidf = fit_tfidf(vocab)
            if rep is Representation.BOW:
                x_train, x_test = bow_matrix(train_docs, vocab), bow_matrix(test_docs, vocab)
                written.append(save_vocabulary(vocab, out / "vocabulary.json"))
            else:
                x_train, x_test = tfidf_matrix(train_docs, tfidf), tfidf_matrix(test_docs, tfidf)
                written.append(save_vocabulary(tfidf, out / "vocabulary.json"))
            if self.config.smote.coarse_features is not None:
                coarse = top_idf_columns(tfidf, self.config.smote.coarse_features)
        elif rep is Representation.WORD2VEC:
            emb = self.config.embedding
            table = train_word2vec(
                train_docs,
                dimension=emb.dimension,
                window=emb.window,
                negatives=emb.negatives,
                epochs=emb.epochs,
                seed=self.config.seed,
                learning_rate=emb.learning_rate,
                min_count=emb.min_count,
                fast=emb.fast,
                n_workers=self.config.max_workers,
            )
            x_train, x_test = embedding_matrix(train_docs, table), embedding_matrix(test_docs, table)
            written.append(save_embeddings(table, out / "embeddings.txt"))
        else:
            encoder = fit_condition_encoder(train_records)
            x_train = manual_matrix(train_records, encoder, max_workers=self.config.max_workers)
            x_test = manual_matrix(test_records, encoder, max_workers=self.config.max_workers)
            written.append(save_condition_encoder(encoder, out / "condition_encoder.json"))

        y_train, y_test = label_vector(train_records), label_vector(test_records)
        train = LabeledMatrix(rows=x_train, labels=y_train)
        before = class_distribution(train.labels)
        if self.config.smote.enabled:
            smote_settings = self.config.smote
            minority = min(train.class_counts().values())
            use_coarse = train.is_sparse and coarse is not None and minority >= smote_settings.coarse_min_rows
            train = smote(
                train,
                smote_settings.for_seed(self.config.seed),
                coarse_columns=coarse if use_coarse else None,
                max_workers=self.config.max_workers,
            )
        after = class_distribution(train.labels)

        written.append(save_matrix(out / "train", train.rows))
        written.append(save_matrix(out / "train_labels", train.labels))
        written.append(save_matrix(out / "train_synthetic", train.synthetic))
        written.append(save_matrix(out / "test", x_test))
        written.append(save_matrix(out / "test_labels", y_test))
        written.append(save_matrix(out / "test_ids", np.array([r.unique_id for r in test_records], dtype=np.int64)))
        if train.is_sparse and self.config.sparse.export_coordinates:
            written.append(export_coordinates(train.rows, out / "train_coordinates.txt"))
            written.append(export_coordinates(x_test, out / "test_coordinates.txt"))

        distribution = label_distribution_frame(before, after, class_distribution(y_test))
        written.append(write_csv(out / "label_distribution.csv", distribution))
        logger.info(
            f"Featurized {rep.value}: train {train.n_rows} x {train.dimension} "
            f"({int(train.synthetic.sum())} synthetic), test {x_test.shape[0]}"
        )
        return written

    def run_featurize(self, representation: Representation) -> None:
        rep = Representation(representation)
        self._require_stage(Stage.PREP.value, Stage.PREP, self.prep_dir / "train.jsonl")
        self._run_stage(f"{Stage.FEATURIZE.value}:{rep.value}", Stage.FEATURIZE, lambda: self._build_features(rep))

    def load_train_set(self, representation: Representation) -> LabeledMatrix:
        out = self.features_dir(representation)
        return LabeledMatrix(
            rows=load_matrix(out / "train"),
            labels=load_matrix(out / "train_labels"),
            synthetic=load_matrix(out / "train_synthetic"),
        )

    def load_test_set(self, representation: Representation) -> Tuple[Matrix, np.ndarray, np.ndarray]:
        """Test rows, labels and record ids."""
        out = self.features_dir(representation)
        return load_matrix(out / "test"), load_matrix(out / "test_labels"), load_matrix(out / "test_ids")

    # Models

    def run_train(self, representation: Representation, algorithm: Algorithm) -> Path:
        rep, alg = Representation(representation), Algorithm(algorithm)
        self._require_stage(
            f"{Stage.FEATURIZE.value}:{rep.value}", Stage.FEATURIZE, self.features_dir(rep) / "train_labels.npy"
        )
        path = self.model_path(rep, alg)

        def body() -> List[Path]:
            train = self.load_train_set(rep)
            model = fit_model(alg, train, self.config.train_config(alg))
            return [save_model(model, path)]

        self._run_stage(f"{Stage.TRAIN.value}:{model_id(rep, alg)}", Stage.TRAIN, body)
        return path

    def run_train_all(self, jobs: Optional[Sequence[Tuple[Representation, Algorithm]]] = None) -> List[Path]:
        """Train every job, ``max_workers`` at a time; results keep job order."""
        jobs = list(jobs if jobs is not None else self.config.training_jobs())
        if self.config.max_workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=self.config.max_workers) as executor:
                return list(executor.map(lambda job: self.run_train(*job), jobs))
        return [self.run_train(rep, alg) for rep, alg in jobs]

    def _require_models(self, jobs: Sequence[Tuple[Representation, Algorithm]]) -> None:
        for rep, alg in jobs:
            self._require_stage(f"{Stage.TRAIN.value}:{model_id(rep, alg)}", Stage.TRAIN, self.model_path(rep, alg))

    # Reports

    def run_evaluate(self) -> List[EvaluationReport]:
        """Evaluate every trained job on its representation's test rows."""
        jobs = self.config.training_jobs()
        self._require_models(jobs)

        def body() -> List[Path]:
            reports = []
            test_sets: Dict[Representation, Tuple[Matrix, np.ndarray, np.ndarray]] = {}
            for rep, alg in jobs:
                if rep not in test_sets:
                    test_sets[rep] = self.load_test_set(rep)
                x_test, y_test, _ = test_sets[rep]
                model = load_model(self.model_path(rep, alg))
                reports.append(evaluate_model(model, x_test, y_test, alg.value, rep.value))
            return write_reports(reports, self.reports_dir)

        self._run_stage(Stage.EVALUATE.value, Stage.EVALUATE, body)
        return self.load_reports()

    def load_reports(self) -> List[EvaluationReport]:
        path = self.reports_dir / "evaluation.json"
        if not path.exists():
            raise StageDependencyError(str(path), Stage.EVALUATE.value)
        return [EvaluationReport.model_validate(r) for r in read_json(path)]

    def run_recommend(self) -> RecommendationTable:
        """Combine the winner models' test predictions into per-condition drug rankings."""
        winners = list(self.config.winners)
        self._require_stage(Stage.PREP.value, Stage.PREP, self.prep_dir / "test.jsonl")
        self._require_models(winners)

        def body() -> List[Path]:
            test_records, _ = self.load_prep("test")
            record_ids = [r.unique_id for r in test_records]
            predictions: Dict[str, np.ndarray] = {}
            for rep, alg in winners:
                x_test, _, ids = self.load_test_set(rep)
                if ids.tolist() != record_ids:
                    raise StageDependencyError(
                        str(self.features_dir(rep) / "test_ids.npy"), Stage.FEATURIZE.value
                    )
                predictions[model_id(rep, alg)] = load_model(self.model_path(rep, alg)).predict(x_test)
            names = [model_id(rep, alg) for rep, alg in winners]
            combined = combine_all(record_ids, predictions, names)
            scored = scored_reviews(test_records, combined, normalize_usefulcount(test_records))
            settings = self.config.recommend
            table = score_drugs(scored, settings.divisor, names, max_workers=self.config.max_workers)
            return write_recommendations(table, self.recommend_dir, settings.top_n, settings.n_conditions)

        self._run_stage(Stage.RECOMMEND.value, Stage.RECOMMEND, body)
        return self.load_recommendations()

    def load_recommendations(self) -> RecommendationTable:
        path = self.recommend_dir / "rankings.json"
        if not path.exists():
            raise StageDependencyError(str(path), Stage.RECOMMEND.value)
        return RecommendationTable.model_validate(read_json(path))

    def run_all(self) -> RecommendationTable:
        """Every stage in order."""
        self.run_stats()
        self.run_prep()
        jobs = self.config.training_jobs()
        for rep in Representation:
            if any(job_rep is rep for job_rep, _ in jobs):
                self.run_featurize(rep)
        self.run_train_all(jobs)
        self.run_evaluate()
        return self.run_recommend()


def label_distribution_frame(train_before: List[int], train_after: List[int], test: List[int]) -> pd.DataFrame:
    """Class counts of the training set before and after SMOTE and of the test set."""
    rows = [
        ("train", "original", *train_before),
        ("train", "resampled", *train_after),
        ("test", "original", *test),
    ]
    frame = pd.DataFrame(rows, columns=["split", "stage", "positive", "negative"])
    frame["total"] = frame["positive"] + frame["negative"]
    return frame
