"""
Resampling Engine - command line interface.
Oversample imbalanced tables, train and sample the conditional WGAN,
run the benchmark protocol and report on it.
"""
import logging
import sys
from pathlib import Path

import click
import numpy as np
import yaml

import settings
from resampling_engine.ablation import DROPS, ablate
from resampling_engine.baselines import OversampleMethod, oversample
from resampling_engine.benchmark import BenchmarkConfig, run_benchmark
from resampling_engine.core import quality
from resampling_engine.core.preprocess import fit_preprocessor, inverse_transform, transform, transform_mixed
from resampling_engine.core.schema import DatasetSchema, load_dataset
from resampling_engine.datasets import make_toy_credit
from resampling_engine.errors import CheckpointError, ConfigError, ResamplingError, SchemaError
from resampling_engine.gan.checkpoint import load_checkpoint, save_checkpoint
from resampling_engine.gan.config import GanConfig, GridSpec
from resampling_engine.gan.training import sample_encoded, train_cwgan
from resampling_engine.reporting import report

_logger = logging.getLogger("app")

EXIT_OK = 0
EXIT_USER_ERROR = 1
EXIT_INTERNAL_ERROR = 2

USER_ERRORS = (ConfigError, SchemaError, CheckpointError, FileNotFoundError)


def _load(schema_path: str):
    schema = DatasetSchema.from_yaml(schema_path)
    frame = load_dataset(schema=schema)
    return schema, frame


def _gan_config(path: str) -> GanConfig:
    return GanConfig.from_yaml(path) if path else GanConfig()


def _write_csv(frame, out: str):
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, index=False)
    click.echo(f"Wrote {len(frame)} rows to {out}")


@click.group()
@click.option("--log-level", default=None, help="Overrides RESAMPLE_LOG_LEVEL.")
def cli(log_level):
    """Oversampling and benchmarking of imbalanced tabular data."""
    settings.configure_logging(log_level)


# ============== OVERSAMPLING ==============

@cli.command("oversample")
@click.option("--config", "schema_path", required=True, type=click.Path(), help="Dataset schema YAML.")
@click.option("--method", type=click.Choice(["none", "random", "smote", "smote_nc", "b_smote", "adasyn", "cwgan"]),
              required=True)
@click.option("--seed", type=int, required=True)
@click.option("--out", required=True, type=click.Path(), help="Balanced CSV.")
@click.option("--k", "k_neighbours", default=5, show_default=True)
@click.option("--m", "m_neighbours", default=10, show_default=True)
@click.option("--gan-config", default=None, type=click.Path(), help="GAN hyperparameter YAML (cwgan).")
@click.option("--grid/--no-grid", default=False, help="Cross-validated grid search before training (cwgan).")
@click.option("--quality-dir", default=None, type=click.Path(), help="Write gen-quality files here.")
@click.option("--verbose", is_flag=True)
def oversample_command(schema_path, method, seed, out, k_neighbours, m_neighbours, gan_config, grid,
                       quality_dir, verbose):
    """Balance one dataset with one method and write it as CSV."""
    schema, frame = _load(schema_path)
    pre = fit_preprocessor(frame, schema)
    encoded = transform(pre, frame)
    spec = OversampleMethod(tag=method, k_neighbours=k_neighbours, m_neighbours=m_neighbours,
                            gan=_gan_config(gan_config) if method == "cwgan" else None,
                            grid=GridSpec() if grid and method == "cwgan" else None)
    result = oversample(spec, encoded, seed, mixed=transform_mixed(pre, frame), preprocessor=pre,
                        verbose=verbose)
    _write_csv(inverse_transform(pre, result.data), out)

    if quality_dir and result.n_synthetic:
        n_real = encoded.n_rows
        minority = int(result.data.labels[n_real])
        real = encoded.subset(np.flatnonzero(encoded.labels == minority))
        synth = result.data.subset(np.arange(n_real, result.data.n_rows))
        report_ = quality.dimwise_prediction(real, synth, seed)
        quality.write_quality_files(report_, quality.univariate_summaries(real, synth), quality_dir)
        summary = quality.generate_quality_report(report_)
        click.echo(f"Quality: {summary['score']} ({summary['summary']})")


# ============== GAN ==============

@cli.command("train-gan")
@click.option("--config", "schema_path", required=True, type=click.Path(), help="Dataset schema YAML.")
@click.option("--gan-config", default=None, type=click.Path())
@click.option("--seed", type=int, required=True)
@click.option("--checkpoint", required=True, type=click.Path(), help="Output checkpoint file.")
@click.option("--verbose", is_flag=True)
def train_gan_command(schema_path, gan_config, seed, checkpoint, verbose):
    """Train the conditional WGAN on a whole dataset and save a checkpoint."""
    schema, frame = _load(schema_path)
    pre = fit_preprocessor(frame, schema)
    gan = train_cwgan(transform(pre, frame), _gan_config(gan_config), seed, preprocessor=pre, verbose=verbose)
    save_checkpoint(gan, checkpoint)
    click.echo(f"Checkpoint saved to {checkpoint} ({gan.disc_steps} critic / {gan.gen_steps} generator steps)")


@cli.command("sample")
@click.option("--checkpoint", required=True, type=click.Path())
@click.option("--n", "n_rows", type=click.IntRange(min=0), required=True)
@click.option("--seed", type=int, required=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--label", type=click.Choice(["positive", "negative"]), default="positive", show_default=True)
def sample_command(checkpoint, n_rows, seed, out, label):
    """Draw rows from a saved generator, in raw table format."""
    gan = load_checkpoint(checkpoint)
    if gan.preprocessor is None:
        raise CheckpointError(f"Checkpoint '{checkpoint}' carries no preprocessor")
    encoded = sample_encoded(gan, n_rows, seed, label=1 if label == "positive" else 0)
    _write_csv(inverse_transform(gan.preprocessor, encoded), out)


# ============== BENCHMARK ==============

def _benchmark_config(config_path, output_dir=None, n_jobs=None, seeds=None) -> BenchmarkConfig:
    config = BenchmarkConfig.from_yaml(config_path)
    updates = {}
    if output_dir:
        updates["output_dir"] = output_dir
    if n_jobs:
        updates["n_jobs"] = n_jobs
    if seeds:
        updates["seeds"] = [int(s) for s in seeds.split(",")]
    if updates:
        config = BenchmarkConfig.from_dict({**config.model_dump(mode="json"), **updates})
    return config


@cli.command("benchmark")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--output-dir", default=None, type=click.Path())
@click.option("--n-jobs", type=int, default=None)
@click.option("--seeds", default=None, help="Comma separated, overrides the config.")
def benchmark_command(config_path, output_dir, n_jobs, seeds):
    """Run the full protocol of a benchmark config."""
    config = _benchmark_config(config_path, output_dir, n_jobs, seeds)
    result = run_benchmark(config)
    click.echo(f"{result.n_records} records, {result.n_failures} failures in {result.output_dir}")


@cli.command("report")
@click.option("--results", "results_dir", required=True, type=click.Path())
@click.option("--out", "out_dir", default=None, type=click.Path())
@click.option("--dataset", "datasets", multiple=True)
@click.option("--method", "methods", multiple=True)
@click.option("--classifier", "classifiers", multiple=True)
@click.option("--metric", "metrics", multiple=True)
@click.option("--policy", type=click.Choice(["competition", "average"]), default="competition", show_default=True)
@click.option("--tie-correction", is_flag=True, help="Tie-corrected Friedman statistic.")
def report_command(results_dir, out_dir, datasets, methods, classifiers, metrics, policy, tie_correction):
    """Rank tables, Friedman tests and score tables of a results store."""
    if not Path(results_dir).is_dir():
        raise FileNotFoundError(f"Results directory '{results_dir}' does not exist")
    bundle = report(results_dir, out_dir, datasets=list(datasets), methods=list(methods),
                    classifiers=list(classifiers), metrics=list(metrics), policy=policy,
                    tie_correction=tie_correction)
    click.echo(f"Report over {bundle.n_records} records written to {bundle.out_dir}")


@cli.command("ablate")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--drop", "drops", multiple=True, type=click.Choice(list(DROPS)),
              help="Component to drop; repeat to drop several together. Default: each one alone.")
@click.option("--output-dir", default=None, type=click.Path())
def ablate_command(config_path, drops, output_dir):
    """Re-run the cWGAN without components and compare counterfactual ranks."""
    config = _benchmark_config(config_path, output_dir)
    summary = ablate(config, [list(drops)] if drops else None)
    click.echo(summary.to_string())


@cli.command("make-toy")
@click.option("--out", required=True, type=click.Path(), help="CSV file.")
@click.option("--schema-out", default=None, type=click.Path(), help="Schema YAML pointing at the CSV.")
@click.option("--rows", default=2000, show_default=True)
@click.option("--minority-share", default=0.2, show_default=True)
@click.option("--seed", type=int, required=True)
def make_toy_command(out, schema_out, rows, minority_share, seed):
    """Write the synthetic toy credit dataset (and its schema)."""
    frame, schema = make_toy_credit(rows, minority_share, seed)
    _write_csv(frame, out)
    if schema_out:
        schema_path = Path(schema_out)
        schema_path.parent.mkdir(parents=True, exist_ok=True)
        data_path = Path(out).resolve()
        raw = schema.model_dump(mode="json", exclude_none=True)
        raw["path"] = str(data_path)
        schema_path.write_text(yaml.safe_dump(raw, sort_keys=False))
        click.echo(f"Wrote schema to {schema_out}")


def main(argv=None) -> int:
    """Run the CLI and map failures to exit codes (0 ok, 1 user error, 2 internal error)."""
    try:
        cli.main(args=argv, prog_name="resample", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("Aborted.", err=True)
        return EXIT_USER_ERROR
    except click.ClickException as e:
        e.show()
        return EXIT_USER_ERROR
    except USER_ERRORS as e:
        click.echo(f"Error: {e}", err=True)
        return EXIT_USER_ERROR
    except ResamplingError as e:
        _logger.error("%s", e)
        click.echo(f"Error: {e}", err=True)
        return EXIT_INTERNAL_ERROR
    except Exception:
        _logger.exception("Unexpected failure")
        return EXIT_INTERNAL_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
