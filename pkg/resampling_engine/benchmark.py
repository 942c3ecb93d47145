"""
Benchmark Module
Main orchestrator of the experimental protocol: split each dataset per seed,
fit preprocessing on the training part, oversample it with every method,
fit every classifier, score the test part with bootstrapping, and persist
the records.
"""
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd
import torch
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from sklearn.model_selection import train_test_split

import results_store
import settings
from resampling_engine.baselines import OversampleMethod, oversample
from resampling_engine.classifiers import ClassifierSpec, default_classifiers, fit_predict
from resampling_engine.core import quality
from resampling_engine.core.preprocess import (
    EncodedMatrix, MixedMatrix, PreprocessorModel, fit_preprocessor, transform, transform_mixed,
)
from resampling_engine.core.schema import DatasetSchema, load_dataset
from resampling_engine.errors import ConfigError, ResamplingError
from resampling_engine.gan.config import LossMode, read_yaml
from resampling_engine.gan.training import ac_score_table
from resampling_engine.metrics import DEFAULT_BOOTSTRAPS, bootstrap_metrics, make_records
from resampling_engine.seeding import derive_seed

_logger = logging.getLogger(__name__)

DEFAULT_SEEDS = [0, 1, 2, 3, 4, 5]


class AblationFlags(BaseModel):
    """Overrides applied to every cWGAN method of a run; None keeps the method's own value."""
    model_config = ConfigDict(frozen=True)

    loss_mode: Optional[LossMode] = None
    use_ac: Optional[bool] = None
    naive_categorical: Optional[bool] = None

    def updates(self) -> dict:
        return {k: v for k, v in self.model_dump().items() if v is not None}


class BenchmarkConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str = "benchmark"
    datasets: List[str] = Field(min_length=1)
    methods: List[OversampleMethod] = Field(min_length=1)
    classifiers: List[ClassifierSpec] = Field(default_factory=default_classifiers)
    seeds: List[int] = Field(default_factory=lambda: list(DEFAULT_SEEDS))
    test_fraction: float = Field(0.1, gt=0.0, lt=1.0)
    bootstrap_size: int = Field(DEFAULT_BOOTSTRAPS, ge=1)
    stratify: bool = True
    ablation: AblationFlags = AblationFlags()
    quality_reports: bool = True
    output_dir: str = Field(default_factory=lambda: settings.RESULTS_DIR)
    n_jobs: int = Field(default_factory=lambda: settings.N_JOBS)

    @field_validator("seeds")
    @classmethod
    def _check_seeds(cls, value):
        if not value:
            raise ValueError("at least one seed is required")
        if len(set(value)) != len(value):
            raise ValueError("seeds must be unique")
        return value

    @model_validator(mode="after")
    def _check_names(self):
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ValueError(f"method names must be unique, got {labels}")
        algos = [c.algo for c in self.classifiers]
        if len(set(algos)) != len(algos):
            raise ValueError("classifiers must be unique")
        return self

    @property
    def config_hash(self) -> str:
        """SHA-256 of the canonical config, execution-only fields excluded."""
        payload = self.model_dump(mode="json", exclude={"output_dir", "n_jobs"})
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()

    def resolved_methods(self) -> List[OversampleMethod]:
        """Methods with the ablation overrides applied to every cWGAN config."""
        updates = self.ablation.updates()
        if not updates:
            return list(self.methods)
        return [
            m.model_copy(update={"gan": m.gan_config.with_updates(**updates)}) if m.tag == "cwgan" else m
            for m in self.methods
        ]

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path = None) -> "BenchmarkConfig":
        raw = dict(raw)
        if base_dir is not None:
            raw["datasets"] = [
                str(Path(base_dir) / d) if not Path(d).is_absolute() else d for d in raw.get("datasets", [])
            ]
            if raw.get("output_dir") and not Path(raw["output_dir"]).is_absolute():
                raw["output_dir"] = str(Path(base_dir) / raw["output_dir"])
        try:
            return cls.model_validate(raw)
        except ValidationError as e:
            raise ConfigError(f"Invalid benchmark config: {e}") from e

    @classmethod
    def from_yaml(cls, path) -> "BenchmarkConfig":
        path = Path(path)
        return cls.from_dict(read_yaml(path), base_dir=path.parent)


class RunRecord(BaseModel):
    """Provenance of one (dataset, seed, method) cell."""
    config_hash: str
    dataset: str
    seed: int
    method: str
    method_params: dict
    selected: Optional[dict] = None
    partition_checksum: str
    train_checksum: str
    n_train: int
    n_test: int
    n_synthetic: int = 0
    n_records: int = 0
    status: str = "ok"
    wall_clock: float = 0.0
    finished_at: str = ""


@dataclass
class Partition:
    """One seeded train/test split with its fitted preprocessing."""
    dataset: str
    seed: int
    preprocessor: PreprocessorModel
    train: EncodedMatrix
    train_mixed: MixedMatrix
    test: EncodedMatrix
    checksum: str
    train_checksum: str


@dataclass
class CellOutcome:
    records: list
    run: RunRecord
    failures: List[dict] = field(default_factory=list)


@dataclass
class BenchmarkResult:
    output_dir: Path
    config_hash: str
    n_records: int
    n_failures: int
    runs: List[RunRecord]


def partition_checksum(train_idx: np.ndarray, test_idx: np.ndarray) -> str:
    key = ",".join(map(str, np.sort(train_idx))) + "|" + ",".join(map(str, np.sort(test_idx)))
    return hashlib.sha256(key.encode()).hexdigest()[:16]


def matrix_checksum(matrix: EncodedMatrix) -> str:
    digest = hashlib.sha256(np.ascontiguousarray(matrix.values, dtype=np.float64).tobytes())
    if matrix.labels is not None:
        digest.update(np.ascontiguousarray(matrix.labels, dtype=np.int64).tobytes())
    return digest.hexdigest()[:16]


def split_dataset(frame: pd.DataFrame, schema: DatasetSchema, seed: int, test_fraction: float,
                  stratify: bool = True) -> Partition:
    """Seeded (stratified) split; preprocessing is fitted on the training rows only."""
    labels = (frame[schema.target].astype(str) == schema.positive_label).to_numpy()
    rows = np.arange(len(frame))
    train_idx, test_idx = train_test_split(rows, test_size=test_fraction, random_state=seed,
                                           shuffle=True, stratify=labels if stratify else None)
    train_frame = frame.iloc[train_idx].reset_index(drop=True)
    test_frame = frame.iloc[test_idx].reset_index(drop=True)

    pre = fit_preprocessor(train_frame, schema)
    train = transform(pre, train_frame)
    return Partition(
        dataset=schema.name, seed=seed, preprocessor=pre,
        train=train, train_mixed=transform_mixed(pre, train_frame), test=transform(pre, test_frame),
        checksum=partition_checksum(train_idx, test_idx), train_checksum=matrix_checksum(train),
    )


def _write_quality(part: Partition, result, method: OversampleMethod, out_dir: Path, seed: int):
    """Gen-quality files for a cWGAN cell: synthetic minority rows against real minority rows."""
    n_real = part.train.n_rows
    minority = result.data.labels[n_real:][0] if result.n_synthetic else 1
    real = part.train.subset(np.flatnonzero(part.train.labels == minority))
    synth = result.data.subset(np.arange(n_real, result.data.n_rows))
    target = results_store.quality_dir(out_dir, part.dataset, part.seed, method.label)
    try:
        report = quality.dimwise_prediction(real, synth, seed)
    except ResamplingError as e:
        _logger.warning("%s/%s: dimension-wise prediction skipped: %s", part.dataset, method.label, e)
        report = quality.dimwise_stats(real, synth)
        report.notes.append(f"Dimension-wise prediction skipped: {e}")
    quality.write_quality_files(report, quality.univariate_summaries(real, synth), target)
    if result.gan is not None and result.gan.params.classifier is not None:
        table = ac_score_table(result.gan, part.train, n_per_class=min(1000, n_real), seed=seed)
        table.to_csv(target / "ac_scores.csv", index=False)


def run_cell(config: BenchmarkConfig, config_hash: str, part: Partition,
             method: OversampleMethod) -> CellOutcome:
    """Oversample one training set with one method and evaluate every classifier on it."""
    torch.set_num_threads(settings.TORCH_THREADS)
    started = time.perf_counter()
    run = RunRecord(
        config_hash=config_hash, dataset=part.dataset, seed=part.seed, method=method.label,
        method_params=method.model_dump(mode="json"), partition_checksum=part.checksum,
        train_checksum=matrix_checksum(part.train), n_train=part.train.n_rows, n_test=part.test.n_rows,
    )
    cell = {"dataset": part.dataset, "seed": part.seed, "method": method.label}

    # 1. Oversample the training part
    method_seed = derive_seed(config_hash, part.dataset, part.seed, method.label)
    try:
        result = oversample(method, part.train, method_seed, mixed=part.train_mixed,
                            preprocessor=part.preprocessor)
    except Exception as e:
        _log_failure(cell, "oversample", e)
        run.status = "failed"
        run.wall_clock = time.perf_counter() - started
        run.finished_at = _now()
        failure = {**cell, "stage": "oversample", "classifier": None, "error": f"{type(e).__name__}: {e}"}
        return CellOutcome(records=[], run=run, failures=[failure])

    run.n_synthetic = result.n_synthetic
    if "selected" in result.details:
        run.selected = result.details["selected"]

    # 2. Classifiers
    records, failures = [], []
    balanced = result.data
    for spec in config.classifiers:
        cell_seed = derive_seed(config_hash, part.dataset, part.seed, method.label, spec.algo)
        try:
            proba = fit_predict(spec, balanced.values, balanced.labels, part.test.values, seed=cell_seed)
            boot = bootstrap_metrics(proba, part.test.labels, B=config.bootstrap_size,
                                     rng=np.random.default_rng(cell_seed))
            records.extend(make_records(boot, part.dataset, part.seed, method.label, spec.algo))
        except Exception as e:
            _log_failure({**cell, "classifier": spec.algo}, "classify", e)
            failures.append({**cell, "stage": "classify", "classifier": spec.algo,
                             "error": f"{type(e).__name__}: {e}"})

    # 3. Generative quality
    if config.quality_reports and method.tag == "cwgan" and result.n_synthetic:
        try:
            _write_quality(part, result, method, Path(config.output_dir), method_seed)
        except Exception as e:
            _logger.warning("%s/%s seed %d: quality report failed: %s", part.dataset, method.label, part.seed, e)

    run.n_records = len(records)
    run.status = "ok" if not failures else "partial"
    run.wall_clock = time.perf_counter() - started
    run.finished_at = _now()
    _logger.info("%s seed %d %s: %d records in %.1fs", part.dataset, part.seed, method.label,
                 len(records), run.wall_clock)
    return CellOutcome(records=records, run=run, failures=failures)


def _log_failure(cell: dict, stage: str, error: Exception):
    if isinstance(error, ResamplingError):
        _logger.error("Cell %s failed at %s: %s", cell, stage, error)
    else:
        _logger.exception("Cell %s failed at %s with an unexpected error", cell, stage)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def load_partitions(config: BenchmarkConfig) -> List[Partition]:
    """Every (dataset, seed) split, datasets in config order."""
    partitions = []
    for path in config.datasets:
        schema = DatasetSchema.from_yaml(path)
        frame = load_dataset(schema=schema)
        _logger.info("Loaded dataset '%s': %d rows, %d features", schema.name, len(frame),
                     len(schema.feature_columns))
        for seed in config.seeds:
            part = split_dataset(frame, schema, seed, config.test_fraction, config.stratify)
            _logger.info("%s seed %d: partition %s (%d train / %d test)", schema.name, seed,
                         part.checksum, part.train.n_rows, part.test.n_rows)
            partitions.append(part)
    return partitions


def run_benchmark(config: BenchmarkConfig) -> BenchmarkResult:
    """
    Run every (dataset, seed, method) cell and persist its records.

    Cells run in parallel with joblib; the results store is written afterwards
    in canonical (dataset, seed, method) order so reruns are byte-identical.

    Args:
        config: Validated benchmark configuration.

    Returns:
        BenchmarkResult with the output directory and counts.
    """
    config_hash = config.config_hash
    out_dir = results_store.reset_store(config.output_dir)
    results_store.write_config(out_dir, config.model_dump(mode="json"), config_hash)
    _logger.info("Benchmark '%s' (config %s) writing to %s", config.name, config_hash[:12], out_dir)

    # 1. Partitions shared by every method
    partitions = load_partitions(config)
    methods = config.resolved_methods()

    # 2. Cells
    tasks = [(part, method) for part in partitions for method in methods]
    outcomes = Parallel(n_jobs=config.n_jobs)(
        delayed(run_cell)(config, config_hash, part, method) for part, method in tasks
    )

    # 3. Persist in canonical order
    n_records = n_failures = 0
    for outcome in outcomes:
        n_records += results_store.append_records(out_dir, outcome.records)
        n_failures += results_store.append_failures(out_dir, outcome.failures)
    results_store.append_runs(out_dir, [o.run for o in outcomes])

    _logger.info("Benchmark finished: %d records, %d failures", n_records, n_failures)
    return BenchmarkResult(output_dir=out_dir, config_hash=config_hash, n_records=n_records,
                           n_failures=n_failures, runs=[o.run for o in outcomes])
