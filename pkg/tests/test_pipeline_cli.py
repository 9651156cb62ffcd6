"""Tests for configuration resolution, stage orchestration and the command line."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner
from loguru import logger

from config.settings import Settings
from src.cli import cli, resolve_config
from src.models.classifier import Algorithm
from src.models.pipeline import Divisor, PipelineConfig
from src.pipeline import MANIFEST_FILE, PipelineRunner, label_distribution_frame, model_id
from src.utils.constants import Representation
from src.utils.exceptions import ConfigError, StageDependencyError

SMALL_CONFIG = {
    "embedding": {"dimension": 16, "epochs": 2},
    "train_overrides": {
        "logistic_regression": {"epochs": 3},
        "perceptron": {"epochs": 3},
        "ridge": {"epochs": 3},
        "sgd_hinge": {"epochs": 3},
        "linear_svc": {"epochs": 3},
        "decision_tree": {"max_depth": 8},
        "random_forest": {"n_trees": 10, "max_depth": 6},
        "gbdt": {"n_rounds": 10},
    },
}

DETERMINISTIC_OUTPUTS = [
    "reports/evaluation.json",
    "reports/evaluation.csv",
    "recommend/rankings.json",
    "recommend/recommendations.csv",
]


@pytest.fixture(autouse=True)
def reset_logging():
    yield
    logger.remove()


@pytest.fixture
def small_config(tmp_path: Path) -> Path:
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL_CONFIG))
    return path


def _invoke(*args: str):
    return CliRunner().invoke(cli, [str(a) for a in args])


class TestConfig:
    def test_round_trip(self):
        config = PipelineConfig(inputs=[Path("a.tsv")], seed=3, train_overrides={"gbdt": {"n_rounds": 5}})
        again = PipelineConfig.model_validate(json.loads(config.model_dump_json()))
        assert again == config
        assert again.train_config(Algorithm.GBDT).n_rounds == 5
        assert again.train_config(Algorithm.GBDT).seed == 3

    def test_hash_ignores_output_location_and_workers(self):
        config = PipelineConfig()
        moved = config.with_overrides(output_dir=Path("/elsewhere"), max_workers=8)
        assert moved.semantic_hash() == config.semantic_hash()
        assert config.with_overrides(seed=7).semantic_hash() != config.semantic_hash()

    def test_invalid_overrides(self):
        with pytest.raises(ValueError):
            PipelineConfig(train_overrides={"gbdt": {"n_rounds": -1}})
        with pytest.raises(ConfigError):
            PipelineConfig().with_overrides(train_fraction=1.5)

    def test_training_jobs_cover_grid_and_winners(self):
        config = PipelineConfig(
            model_grid={"bow": ["perceptron"]},
            winners=[("bow", "perceptron"), ("manual", "gbdt")],
        )
        assert config.training_jobs() == [
            (Representation.BOW, Algorithm.PERCEPTRON),
            (Representation.MANUAL, Algorithm.GBDT),
        ]

    def test_flags_win_over_file(self, cli_env, small_config):
        settings = Settings()
        config = resolve_config(
            settings,
            config_path=small_config,
            seed=11,
            smote_ratio=0.5,
            smote_off=True,
            top_n_drugs=3,
            mean_by_reviews=True,
            winners=["tfidf:ridge"],
        )
        assert config.embedding.dimension == 16
        assert config.seed == 11
        assert config.smote.target_ratio == 0.5
        assert not config.smote.enabled
        assert config.recommend.top_n == 3
        assert config.recommend.divisor is Divisor.REVIEW_COUNT
        assert config.winners == [(Representation.TFIDF, Algorithm.RIDGE)]
        assert config.output_dir == settings.output_dir

    def test_bad_winner_and_missing_file(self, cli_env, tmp_path):
        with pytest.raises(ConfigError):
            resolve_config(Settings(), winners=["tfidf-ridge"])
        with pytest.raises(ConfigError):
            resolve_config(Settings(), config_path=tmp_path / "absent.json")


def test_label_distribution_frame():
    frame = label_distribution_frame([70, 30], [70, 49], [20, 10])
    assert list(frame.columns) == ["split", "stage", "positive", "negative", "total"]
    assert frame["total"].tolist() == [100, 119, 30]


class TestStageDependencies:
    def test_featurize_needs_prep(self, tmp_path):
        runner = PipelineRunner(PipelineConfig(output_dir=tmp_path / "out"))
        with pytest.raises(StageDependencyError, match="train.jsonl"):
            runner.run_featurize(Representation.BOW)

    def test_evaluate_without_models_exits_2(self, cli_env, tmp_path):
        result = _invoke("evaluate", "--output", tmp_path / "out")
        assert result.exit_code == 2
        assert f"{model_id(Representation.BOW, Algorithm.LOGISTIC_REGRESSION)}.json" in result.output
        assert "train" in result.output

    def test_missing_input_exits_2(self, cli_env, tmp_path):
        result = _invoke("stats", "--input", tmp_path / "nope.tsv", "--output", tmp_path / "out")
        assert result.exit_code == 2
        assert "nope.tsv" in result.output

    def test_no_input_exits_2(self, cli_env, tmp_path):
        result = _invoke("prep", "--output", tmp_path / "out")
        assert result.exit_code == 2

    def test_model_needs_rep(self, cli_env, tmp_path):
        result = _invoke("train", "--model", "gbdt", "--output", tmp_path / "out")
        assert result.exit_code == 2

    def test_prep_from_another_seed_is_refused(self, cli_env, corpus_file, tmp_path):
        out = tmp_path / "out"
        PipelineRunner(PipelineConfig(inputs=[corpus_file], output_dir=out, seed=1)).run_prep()
        reseeded = PipelineRunner(PipelineConfig(inputs=[corpus_file], output_dir=out, seed=2))
        with pytest.raises(StageDependencyError, match="different configuration") as info:
            reseeded.run_featurize(Representation.MANUAL)
        assert info.value.stale
        assert not (out / "features" / "manual" / "train.npy").exists()

        result = _invoke("featurize", "--rep", "manual", "--input", corpus_file, "--output", out, "--seed", "2")
        assert result.exit_code == 2
        assert "train.jsonl" in result.output

    def test_retraining_invalidates_later_stages(self, cli_env, corpus_file, tmp_path):
        config = PipelineConfig.model_validate({
            **SMALL_CONFIG,
            "inputs": [str(corpus_file)],
            "output_dir": str(tmp_path / "out"),
            "model_grid": {"manual": ["decision_tree"]},
            "winners": [["manual", "decision_tree"]],
        })
        runner = PipelineRunner(config)
        runner.run_prep()
        runner.run_featurize(Representation.MANUAL)
        runner.run_featurize(Representation.BOW)
        runner.run_train(Representation.MANUAL, Algorithm.DECISION_TREE)
        runner.run_train(Representation.BOW, Algorithm.PERCEPTRON)
        runner.run_evaluate()
        assert runner.is_current("evaluate")

        forced = PipelineRunner(config, force=True)
        forced.run_train(Representation.MANUAL, Algorithm.DECISION_TREE)
        assert "evaluate" not in forced.manifest.stages
        assert not PipelineRunner(config).is_current("evaluate")

        forced.run_featurize(Representation.MANUAL)
        assert "train:manual__decision_tree" not in forced.manifest.stages
        assert "train:bow__perceptron" in forced.manifest.stages
        with pytest.raises(StageDependencyError, match="manual__decision_tree.json"):
            PipelineRunner(config).run_evaluate()


class TestExitStatus:
    def test_unexpected_failure_exits_1(self, cli_env, corpus_file, tmp_path, mocker):
        run_stats = mocker.patch.object(PipelineRunner, "run_stats", side_effect=RuntimeError("disk on fire"))
        result = _invoke("stats", "--input", corpus_file, "--output", tmp_path / "out")
        assert result.exit_code == 1
        assert "disk on fire" in result.output
        run_stats.assert_called_once()

    def test_library_error_exits_2(self, cli_env, corpus_file, tmp_path, mocker):
        mocker.patch.object(
            PipelineRunner, "run_prep", side_effect=StageDependencyError("somewhere/train.jsonl", "prep")
        )
        result = _invoke("prep", "--input", corpus_file, "--output", tmp_path / "out")
        assert result.exit_code == 2
        assert "missing artifact: somewhere/train.jsonl" in result.output


def test_stats_command(cli_env, corpus_file, tmp_path):
    out = tmp_path / "out"
    result = _invoke("stats", "--input", corpus_file, "--output", out)
    assert result.exit_code == 0, result.output
    stats = json.loads((out / "stats" / "stats.json").read_text())
    assert stats["row_count"] == stats["cleaning"]["output_rows"]
    assert stats["cleaning"]["input_rows"] == 2000
    assert (out / MANIFEST_FILE).exists()


def test_stages_one_at_a_time(cli_env, corpus_file, small_config, tmp_path):
    out = tmp_path / "out"
    common = ["--input", corpus_file, "--output", out, "--config", small_config]
    assert _invoke("prep", *common).exit_code == 0
    assert _invoke("featurize", "--rep", "manual", *common).exit_code == 0
    assert (out / "features" / "manual" / "train.npy").exists()
    assert (out / "features" / "manual" / "label_distribution.csv").exists()

    result = _invoke("train", "--rep", "manual", "--model", "decision_tree", *common)
    assert result.exit_code == 0, result.output
    assert (out / "models" / "manual__decision_tree.json").exists()
    assert not (out / "models" / "manual__gbdt.json").exists()


@pytest.mark.slow
def test_pipeline_is_reproducible_and_resumable(cli_env, corpus_file, small_config, tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    for out in (first, second):
        result = _invoke(
            "pipeline", "--input", corpus_file, "--output", out, "--config", small_config,
            "--top-n", "4", "--conditions", "5",
        )
        assert result.exit_code == 0, result.output

    for name in DETERMINISTIC_OUTPUTS:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name

    recommendations = json.loads((first / "recommend" / "recommendations.json").read_text())
    assert recommendations["top_n"] == 4
    assert len(recommendations["conditions"]) == 5
    assert all(1 <= len(c["drugs"]) <= 4 for c in recommendations["conditions"])
    assert recommendations["models"] == [
        "bow__perceptron", "tfidf__linear_svc", "word2vec__gbdt", "manual__random_forest"
    ]

    # nothing is re-run, so the manifest is not rewritten
    manifest = (first / MANIFEST_FILE).read_bytes()
    result = _invoke(
        "pipeline", "--input", corpus_file, "--output", first, "--config", small_config,
        "--top-n", "4", "--conditions", "5",
    )
    assert result.exit_code == 0, result.output
    assert (first / MANIFEST_FILE).read_bytes() == manifest

    stages = json.loads(manifest)["stages"]
    assert {"stats", "prep", "featurize:bow", "train:manual__gbdt", "evaluate", "recommend"} <= set(stages)


@pytest.mark.integration
@pytest.mark.slow
def test_tfidf_linear_svc_beats_majority_baseline(uci_files, tmp_path):
    config = PipelineConfig(
        inputs=uci_files,
        output_dir=tmp_path / "uci",
        model_grid={"tfidf": ["linear_svc"]},
        winners=[("tfidf", "linear_svc")],
    )
    runner = PipelineRunner(config)
    runner.run_prep()
    runner.run_featurize(Representation.TFIDF)
    runner.run_train(Representation.TFIDF, Algorithm.LINEAR_SVC)
    (report,) = runner.run_evaluate()
    # majority-class test accuracy is about 0.70
    assert report.accuracy >= 0.80
    logger.info(f"tfidf linear_svc: accuracy {report.accuracy:.4f}, AUC {report.auc:.4f}")
