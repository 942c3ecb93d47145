"""
Desk-scale end-to-end checks. Minutes of CPU each; run with `pytest -m slow`.
The German credit check needs GERMAN_CREDIT_SCHEMA pointing at a schema YAML
(see configs/german_credit.yaml).
"""
import os

import numpy as np
import pytest

import results_store
from resampling_engine import ablation
from resampling_engine.benchmark import BenchmarkConfig, run_benchmark
from resampling_engine.core.preprocess import fit_preprocessor, transform
from resampling_engine.core.quality import dimwise_stats
from resampling_engine.datasets import make_toy_credit
from resampling_engine.gan.config import GanConfig
from resampling_engine.gan.training import classifier_scores, sample_encoded, train_cwgan

pytestmark = pytest.mark.slow


@pytest.mark.skipif(not os.getenv("GERMAN_CREDIT_SCHEMA"), reason="GERMAN_CREDIT_SCHEMA not set")
def test_german_credit_random_forest_baseline(tmp_path):
    config = BenchmarkConfig.from_dict({
        "datasets": [os.environ["GERMAN_CREDIT_SCHEMA"]],
        "methods": [{"tag": "none"}],
        "classifiers": [{"algo": "random_forest"}],
        "seeds": [0, 1, 2, 3, 4, 5],
        "test_fraction": 0.1,
        "bootstrap_size": 10,
        "output_dir": str(tmp_path / "german"),
    })
    result = run_benchmark(config)
    frame = results_store.records_frame(result.output_dir)
    auc = frame.loc[frame["metric"] == "auc_roc", "value"]
    assert len(auc) == 6
    assert auc.mean() == pytest.approx(0.76, abs=0.05)


def test_cwgan_matches_toy_moments_and_satisfies_the_classifier():
    frame, schema = make_toy_credit(n_rows=2000, minority_share=0.2, seed=0)
    pre = fit_preprocessor(frame, schema)
    encoded = transform(pre, frame)
    gan = train_cwgan(encoded, GanConfig(epochs=300), seed=0, preprocessor=pre)

    real_minority = encoded.subset(np.flatnonzero(encoded.labels == 1))
    synth = sample_encoded(gan, real_minority.n_rows, seed=1, label=1)
    report = dimwise_stats(real_minority, synth)
    assert report.means.rmse < 0.05
    assert report.stds.rmse < 0.10
    assert classifier_scores(gan, synth).mean() > 0.74


def test_toy_protocol_end_to_end(toy_files, tmp_path):
    raw = {
        "datasets": [str(toy_files)],
        "methods": [{"tag": "none"}, {"tag": "random"}, {"tag": "smote"},
                    {"tag": "cwgan", "gan": {"epochs": 20}}],
        "seeds": [0, 1],
        "bootstrap_size": 100,
        "output_dir": str(tmp_path / "toy"),
    }
    config = BenchmarkConfig.from_dict(raw)
    first = run_benchmark(config)
    assert first.n_records == 2 * 4 * 5 * 3
    assert first.n_failures == 0
    frame = results_store.records_frame(first.output_dir)
    assert all(len(b) == 100 for b in frame["bootstrap"])
    for seed in (0, 1):
        checksums = {r.partition_checksum for r in first.runs if r.seed == seed}
        assert len(checksums) == 1

    metrics = (first.output_dir / results_store.METRICS_FILE).read_bytes()
    second = run_benchmark(config)
    assert (second.output_dir / results_store.METRICS_FILE).read_bytes() == metrics


def test_three_ablations_emit_counterfactual_ranks(toy_files, tmp_path):
    config = BenchmarkConfig.from_dict({
        "datasets": [str(toy_files)],
        "methods": [{"tag": "none"}, {"tag": "smote"}, {"tag": "cwgan", "gan": {"epochs": 10}}],
        "classifiers": [{"algo": "logistic"}, {"algo": "random_forest"}],
        "seeds": [0],
        "bootstrap_size": 5,
        "quality_reports": False,
        "output_dir": str(tmp_path / "abl"),
    })
    summary = ablation.ablate(config)
    assert list(summary.columns.get_level_values("variant")) == ["no_wgan_gp", "no_ac", "no_categorical"]
    assert "Counterfactual mean rank" in summary.index
    report = (results_store.get_store(config.output_dir) / "ablation" / "report" / "report.md").read_text()
    assert "Counterfactual mean rank" in report
