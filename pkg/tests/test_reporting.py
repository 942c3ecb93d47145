import json

import pandas as pd
import pytest

from resampling_engine import reporting
from resampling_engine.benchmark import BenchmarkConfig, run_benchmark


@pytest.fixture
def results_dir(bench_raw):
    raw = dict(bench_raw, methods=[{"tag": "none"}, {"tag": "random"}, {"tag": "smote"}])
    return run_benchmark(BenchmarkConfig.from_dict(raw)).output_dir


def test_report_bundle(results_dir, tmp_path):
    bundle = reporting.report(results_dir, tmp_path / "report")
    names = {p.name for p in bundle.files}
    for expected in ("overall.csv", "ranks.csv", "friedman.csv", "scores.csv", "summary.json",
                     "report.md", "report.html", "raw_knn_auc_roc.csv"):
        assert expected in names
    assert bundle.n_records == 1 * 2 * 3 * 5 * 3

    overall = bundle.tables["overall"]
    assert list(overall.columns) == ["mean_rank", "rank"]
    assert set(overall.index) == {"none", "random", "smote"}
    assert overall["mean_rank"].is_monotonic_increasing

    friedman = bundle.tables["friedman"]
    assert len(friedman) == 5 * 3
    assert (friedman["n"] == 1).all()  # one dataset: statistic left undefined

    text = (tmp_path / "report" / "report.md").read_text()
    assert "## Overall mean rank" in text
    assert "<table>" in (tmp_path / "report" / "report.html").read_text()
    summary = json.loads((tmp_path / "report" / "summary.json").read_text())
    assert summary["n_records"] == 90


def test_report_filters(results_dir, tmp_path):
    bundle = reporting.report(results_dir, tmp_path / "r", methods=["smote", "none"],
                              classifiers=["knn"], metrics=["auc_roc"])
    assert bundle.n_records == 2 * 2
    assert list(bundle.tables["mean_ranks_dataset"].columns) == ["smote", "none"]


def test_empty_selection_still_writes_a_report(results_dir, tmp_path):
    bundle = reporting.report(results_dir, tmp_path / "empty", datasets=["nothing"])
    assert bundle.n_records == 0
    assert "No records match" in (tmp_path / "empty" / "report.md").read_text()


def test_extra_sections_are_rendered(results_dir, tmp_path):
    extra = pd.DataFrame({"variant": ["x"]}, index=["row"])
    reporting.report(results_dir, tmp_path / "x", extra_sections={"Ablation": extra})
    assert "## Ablation" in (tmp_path / "x" / "report.md").read_text()


def test_markdown_table():
    table = pd.DataFrame({"mean_rank": [1.5, float("nan")]}, index=pd.Index(["a", "b"], name="method"))
    text = reporting.manual_to_markdown(table)
    assert text.splitlines()[0] == "| method | mean_rank |"
    assert "| a | 1.50 |" in text
    assert "| b |  |" in text
    assert reporting.manual_to_markdown(pd.DataFrame()) == "_(empty)_"


def test_format_score():
    assert reporting.format_score(0.76049, 0.03551) == "0.7605 (0.0355)"


def test_markdown_table_with_two_header_levels():
    columns = pd.MultiIndex.from_tuples([("no_ac", "d1"), ("no_ac", "d2")], names=["variant", "dataset"])
    table = pd.DataFrame([["1/3", "0/3"]], index=["worse"], columns=columns)
    text = reporting.manual_to_markdown(table)
    assert text.splitlines()[0] == "| index | no_ac / d1 | no_ac / d2 |"
    assert "| worse | 1/3 | 0/3 |" in text
