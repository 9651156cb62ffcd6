"""
Command-line interface for the drug review pipeline.

Every subcommand resolves one ``PipelineConfig`` (JSON config file, then
flags; flags win), runs its stage through ``PipelineRunner`` and prints a
summary table. Library errors exit with status 2 and a one-line diagnostic;
anything unexpected exits with status 1 after logging the traceback.
"""

import functools
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import click
from loguru import logger
from rich.console import Console
from rich.table import Table

from config.settings import Settings

from .models.classifier import Algorithm
from .models.pipeline import Divisor, PipelineConfig
from .models.report import EvaluationReport, RecommendationTable
from .models.review import CorpusStats
from .pipeline import PipelineRunner
from .recommend import top_conditions, top_n
from .utils.constants import Representation
from .utils.exceptions import ConfigError, DrugRecError
from .utils.io import read_json

LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level} | {name}:{function}:{line} - {message}"

REPRESENTATIONS = [r.value for r in Representation]
ALGORITHMS = [a.value for a in Algorithm]


def _setup_logging(settings: Settings, level: Optional[str] = None) -> None:
    """Log to stderr and to a rotating file."""
    level = (level or settings.log_level).upper()
    logger.remove()
    logger.add(sys.stderr, level=level, format="{level: <8} | {message}")
    log_path = Path(settings.log_file)
    log_path.parent.mkdir(parents=True, exist_ok=True)
    logger.add(
        log_path,
        rotation=settings.log_rotation,
        retention=settings.log_retention,
        level=level,
        format=LOG_FORMAT,
    )


def load_config(config_path: Optional[Path], settings: Settings) -> PipelineConfig:
    """
    Base configuration: the JSON file when given, defaults otherwise. The
    output directory and worker count fall back to the environment settings.

    Raises:
        ConfigError: If the file is missing or invalid
    """
    data: Dict[str, Any] = {}
    if config_path is not None:
        if not Path(config_path).exists():
            raise ConfigError(f"config file not found: {config_path}")
        try:
            data = read_json(config_path)
        except ValueError as e:
            raise ConfigError(f"config file {config_path} is not valid JSON: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"config file {config_path} must hold a JSON object")
    data.setdefault("output_dir", str(settings.output_dir))
    data.setdefault("max_workers", settings.max_workers)
    try:
        return PipelineConfig.model_validate(data)
    except ValueError as e:
        raise ConfigError(f"invalid configuration: {e}")


def _parse_winner(value: str) -> Tuple[str, str]:
    rep, sep, alg = value.partition(":")
    if not sep or rep not in REPRESENTATIONS or alg not in ALGORITHMS:
        raise ConfigError(f"winner must look like <representation>:<algorithm>, got {value!r}")
    return rep, alg


def resolve_config(
    settings: Settings,
    config_path: Optional[Path] = None,
    inputs: Sequence[Path] = (),
    output_dir: Optional[Path] = None,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
    smote_ratio: Optional[float] = None,
    smote_k: Optional[int] = None,
    smote_off: bool = False,
    top_n_drugs: Optional[int] = None,
    n_conditions: Optional[int] = None,
    mean_by_reviews: bool = False,
    winners: Sequence[str] = (),
) -> PipelineConfig:
    """Apply command-line flags on top of the base configuration."""
    config = load_config(config_path, settings)
    base = config.model_dump()

    smote = dict(base["smote"])
    if smote_ratio is not None:
        smote["target_ratio"] = smote_ratio
    if smote_k is not None:
        smote["k_neighbors"] = smote_k
    if smote_off:
        smote["enabled"] = False

    recommend = dict(base["recommend"])
    if top_n_drugs is not None:
        recommend["top_n"] = top_n_drugs
    if n_conditions is not None:
        recommend["n_conditions"] = n_conditions
    if mean_by_reviews:
        recommend["divisor"] = Divisor.REVIEW_COUNT

    return config.with_overrides(
        inputs=list(inputs) or None,
        output_dir=output_dir,
        seed=seed,
        max_workers=workers,
        smote=smote,
        recommend=recommend,
        winners=[_parse_winner(w) for w in winners] or None,
    )


def handle_errors(func: Callable) -> Callable:
    """Map library errors to exit status 2 and unexpected ones to 1."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except DrugRecError as e:
            logger.error(str(e))
            click.echo(f"Error: {e}", err=True)
            sys.exit(2)
        except click.ClickException:
            raise
        except Exception as e:
            logger.exception(f"Unexpected failure: {e}")
            click.echo(f"Unexpected error: {e}", err=True)
            sys.exit(1)

    return wrapper


def run_options(func: Callable) -> Callable:
    """Options shared by every subcommand."""
    options = [
        click.option("--input", "inputs", multiple=True, type=click.Path(path_type=Path, dir_okay=False),
                     help="Review TSV file; repeat to concatenate several"),
        click.option("--output", "output_dir", type=click.Path(path_type=Path, file_okay=False),
                     help="Output directory (default: DRUGREC_OUTPUT_DIR)"),
        click.option("--config", "config_path", type=click.Path(path_type=Path, dir_okay=False),
                     help="JSON pipeline configuration"),
        click.option("--seed", type=int, help="Seed for the split, embeddings, SMOTE and learners"),
        click.option("--workers", type=click.IntRange(min=1), help="Worker threads"),
        click.option("--force", is_flag=True, help="Re-run stages even when cached outputs are current"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def smote_options(func: Callable) -> Callable:
    options = [
        click.option("--smote-ratio", type=click.FloatRange(min=0, min_open=True, max=1),
                     help="Minority target as a fraction of the majority class"),
        click.option("--smote-k", type=click.IntRange(min=1), help="Nearest neighbours for SMOTE"),
        click.option("--smote-off", is_flag=True, help="Train on the unbalanced training set"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def recommend_options(func: Callable) -> Callable:
    options = [
        click.option("--top-n", "top_n_drugs", type=click.IntRange(min=1), help="Drugs listed per condition"),
        click.option("--conditions", "n_conditions", type=click.IntRange(min=1),
                     help="Number of most-reviewed conditions to list"),
        click.option("--mean-by-reviews", is_flag=True,
                     help="Divide overall scores by the drug's review count instead of the condition's drug count"),
        click.option("--winner", "winners", multiple=True,
                     help="Winner model as <representation>:<algorithm>; repeat for each"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _runner(ctx: click.Context, force: bool, **flags: Any) -> PipelineRunner:
    settings: Settings = ctx.obj["settings"]
    config = resolve_config(settings, **flags)
    logger.debug(f"Resolved configuration (hash {config.semantic_hash()[:12]})")
    return PipelineRunner(config, force=force)


# Rendering

def render_stats(console: Console, stats: CorpusStats, limit: int = 10) -> None:
    table = Table(title=f"Conditions by number of drugs ({stats.row_count} reviews)")
    table.add_column("Condition")
    table.add_column("Drugs", justify="right")
    table.add_column("Reviews", justify="right")
    for condition, drugs in list(stats.condition_drug_counts.items())[:limit]:
        table.add_row(condition, str(drugs), str(stats.condition_review_counts.get(condition, 0)))
    console.print(table)

    labels = Table(title="Labels")
    labels.add_column("Label")
    labels.add_column("Reviews", justify="right")
    for label, count in stats.label_counts.items():
        labels.add_row(label, str(count))
    console.print(labels)
    if stats.cleaning is not None:
        c = stats.cleaning
        console.print(
            f"Cleaning: {c.input_rows} -> {c.output_rows} rows "
            f"(null condition {c.null_condition}, junk {c.junk_condition}, duplicate id {c.duplicate_id})"
        )


def render_reports(console: Console, reports: List[EvaluationReport]) -> None:
    for rep in sorted({r.representation for r in reports}):
        table = Table(title=f"Results on {rep}")
        for column in ("Model", "Class", "Precision", "Recall", "F1", "Accuracy", "AUC"):
            table.add_column(column, justify="left" if column in ("Model", "Class") else "right")
        for r in sorted((r for r in reports if r.representation == rep), key=lambda r: r.model):
            for metrics in (r.positive, r.negative):
                table.add_row(
                    r.model,
                    metrics.label,
                    f"{metrics.precision:.3f}",
                    f"{metrics.recall:.3f}",
                    f"{metrics.f1:.3f}",
                    f"{r.accuracy:.3f}",
                    f"{r.auc:.3f}",
                )
        console.print(table)


def render_recommendations(console: Console, table: RecommendationTable, n: int, n_conditions: int) -> None:
    view = Table(title=f"Top {n} drugs for the {n_conditions} most-reviewed conditions")
    view.add_column("Condition")
    view.add_column("Rank", justify="right")
    view.add_column("Drug")
    view.add_column("Final score", justify="right")
    for condition in top_conditions(table, n_conditions):
        for entry in top_n(table, condition, n):
            view.add_row(condition, str(entry.rank), entry.drug, f"{entry.final_score:.4f}")
    console.print(view)


# Commands

@click.group()
@click.option("--log-level", default=None, help="Override DRUGREC_LOG_LEVEL")
@click.pass_context
def cli(ctx: click.Context, log_level: Optional[str]) -> None:
    """Drug review sentiment pipeline and drug recommender."""
    settings = Settings()
    _setup_logging(settings, log_level)
    ctx.ensure_object(dict)
    ctx.obj["settings"] = settings
    ctx.obj["console"] = Console()


@cli.command()
@run_options
@click.pass_context
@handle_errors
def stats(ctx: click.Context, force: bool, **flags: Any) -> None:
    """Summarize the cleaned corpus."""
    result = _runner(ctx, force, **flags).run_stats()
    render_stats(ctx.obj["console"], result)


@cli.command()
@run_options
@click.pass_context
@handle_errors
def prep(ctx: click.Context, force: bool, **flags: Any) -> None:
    """Clean, split and preprocess the corpus."""
    runner = _runner(ctx, force, **flags)
    runner.run_prep()
    ctx.obj["console"].print(f"Prepared corpus in {runner.prep_dir}")


@cli.command()
@run_options
@smote_options
@click.option("--rep", "representations", multiple=True, type=click.Choice(REPRESENTATIONS),
              help="Representation to build; repeat for several (default: all)")
@click.pass_context
@handle_errors
def featurize(ctx: click.Context, force: bool, representations: Tuple[str, ...], **flags: Any) -> None:
    """Build feature matrices and balance the training rows."""
    runner = _runner(ctx, force, **flags)
    for rep in representations or REPRESENTATIONS:
        runner.run_featurize(Representation(rep))
        ctx.obj["console"].print(f"Features for {rep} in {runner.features_dir(Representation(rep))}")


@cli.command()
@run_options
@smote_options
@click.option("--rep", "representation", type=click.Choice(REPRESENTATIONS), default=None,
              help="Representation to train on (default: every grid job)")
@click.option("--model", "algorithm", type=click.Choice(ALGORITHMS), default=None,
              help="Algorithm to fit (requires --rep)")
@click.pass_context
@handle_errors
def train(
    ctx: click.Context, force: bool, representation: Optional[str], algorithm: Optional[str], **flags: Any
) -> None:
    """Fit classifiers on featurized training rows."""
    runner = _runner(ctx, force, **flags)
    if algorithm is not None and representation is None:
        raise ConfigError("--model needs --rep")
    if representation is None:
        jobs = runner.config.training_jobs()
    elif algorithm is None:
        rep = Representation(representation)
        jobs = [job for job in runner.config.training_jobs() if job[0] is rep]
    else:
        jobs = [(Representation(representation), Algorithm(algorithm))]
    for path in runner.run_train_all(jobs):
        ctx.obj["console"].print(f"Model saved to {path}")


@cli.command()
@run_options
@smote_options
@click.pass_context
@handle_errors
def evaluate(ctx: click.Context, force: bool, **flags: Any) -> None:
    """Score every trained model on the test split."""
    runner = _runner(ctx, force, **flags)
    render_reports(ctx.obj["console"], runner.run_evaluate())


@cli.command()
@run_options
@smote_options
@recommend_options
@click.pass_context
@handle_errors
def recommend(ctx: click.Context, force: bool, **flags: Any) -> None:
    """Rank drugs per condition from the winner models' votes."""
    runner = _runner(ctx, force, **flags)
    table = runner.run_recommend()
    settings = runner.config.recommend
    render_recommendations(ctx.obj["console"], table, settings.top_n, settings.n_conditions)


@cli.command()
@run_options
@smote_options
@recommend_options
@click.pass_context
@handle_errors
def pipeline(ctx: click.Context, force: bool, **flags: Any) -> None:
    """Run every stage from the raw corpus to recommendations."""
    runner = _runner(ctx, force, **flags)
    table = runner.run_all()
    console = ctx.obj["console"]
    render_reports(console, runner.load_reports())
    settings = runner.config.recommend
    render_recommendations(console, table, settings.top_n, settings.n_conditions)


def main() -> None:
    """Console-script entry point."""
    cli(obj={})


if __name__ == "__main__":
    main()
