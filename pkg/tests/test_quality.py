import json

import numpy as np
import pytest
from scipy.integrate import trapezoid

from resampling_engine.core import quality
from resampling_engine.core.preprocess import CategoricalSpan, EncodedLayout, EncodedMatrix
from resampling_engine.errors import PreprocessError

LAYOUT = EncodedLayout(("a",), (CategoricalSpan("c", 1, 4, ("x", "y", "z")),))


def _matrix(numeric, codes):
    values = np.zeros((len(numeric), LAYOUT.width))
    values[:, 0] = numeric
    values[np.arange(len(codes)), 1 + np.asarray(codes)] = 1.0
    return EncodedMatrix(values=values, layout=LAYOUT)


def test_panel_rmse():
    panel = quality.Panel.build(["a", "b"], [0.2, 0.4], [0.3, 0.5])
    assert panel.rmse == pytest.approx(0.1)
    assert panel.pearson == pytest.approx(1.0)


def test_pearson_matches_numpy():
    rng = np.random.default_rng(0)
    a, b = rng.random(30), rng.random(30)
    assert quality.pearson(a, b) == pytest.approx(np.corrcoef(a, b)[0, 1])
    assert quality.pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]) is None
    assert quality.pearson([1.0], [2.0]) is None


def test_identical_data_scores_perfectly(toy_encoded):
    _, encoded, _ = toy_encoded
    report = quality.dimwise_stats(encoded, encoded)
    assert report.means.rmse == 0.0
    assert report.stds.rmse == 0.0
    assert report.means.pearson == pytest.approx(1.0)
    assert quality.generate_quality_report(report)["score"] == "high"


def test_stds_are_population_stds():
    real = _matrix([0.0, 1.0], [0, 1])
    report = quality.dimwise_stats(real, real)
    assert report.stds.real[0] == pytest.approx(0.5)


def test_layouts_must_match(toy_encoded):
    _, encoded, _ = toy_encoded
    with pytest.raises(PreprocessError):
        quality.dimwise_stats(encoded, _matrix([0.1] * 3, [0, 1, 2]))


def test_prediction_panel_has_one_entry_per_variable(toy_encoded):
    _, encoded, _ = toy_encoded
    rng = np.random.default_rng(0)
    synth = encoded.subset(rng.integers(0, encoded.n_rows, encoded.n_rows))
    report = quality.dimwise_prediction(encoded, synth, seed=0)
    assert report.prediction.labels == ["income", "debt_ratio", "housing"]
    assert np.isfinite(report.prediction.rmse)
    again = quality.dimwise_prediction(encoded, synth, seed=0)
    np.testing.assert_array_equal(report.prediction.real, again.prediction.real)


def test_prediction_skips_single_category_variables():
    rng = np.random.default_rng(1)
    real = _matrix(rng.random(40), np.zeros(40, dtype=int))
    report = quality.dimwise_prediction(real, real, seed=0)
    assert report.prediction.labels == ["a"]
    assert any("'c' skipped" in note for note in report.notes)


def test_prediction_needs_enough_rows():
    small = _matrix([0.1, 0.2, 0.3], [0, 1, 2])
    with pytest.raises(PreprocessError):
        quality.dimwise_prediction(small, small, seed=0)


def test_density_of_a_point_mass():
    real = _matrix([0.5] * 5, [0] * 5)
    kde = quality.univariate_summaries(real, real)["kde"]
    assert trapezoid(kde["real"], kde["x"]) == pytest.approx(1.0, abs=1e-3)
    assert kde["x"].iloc[int(kde["real"].argmax())] == pytest.approx(0.5, abs=0.002)


@pytest.mark.parametrize("seed", range(3))
def test_every_density_curve_integrates_to_one(seed):
    rng = np.random.default_rng(seed)
    layout = EncodedLayout(("a", "b", "c"), ())
    real = EncodedMatrix(values=rng.uniform(0.1, 0.9, (300, 3)), layout=layout)
    synth = EncodedMatrix(values=rng.beta(2.0, 5.0, (200, 3)) * 0.8 + 0.1, layout=layout)
    kde = quality.univariate_summaries(real, synth)["kde"]
    assert kde["column"].unique().tolist() == ["a", "b", "c"]
    for _, curve in kde.groupby("column"):
        assert len(curve) == len(quality.KDE_GRID)
        for side in ("real", "synthetic"):
            assert trapezoid(curve[side], curve["x"]) == pytest.approx(1.0, abs=1e-3)


def test_category_counts_are_sorted_and_complete():
    real = _matrix([0.1] * 6, [1, 1, 1, 0, 0, 1])
    synth = _matrix([0.1] * 2, [2, 2])
    summaries = quality.univariate_summaries(real, synth)
    counts = summaries["counts"]
    assert counts["category"].tolist() == ["y", "x", "z"]
    assert counts["real"].tolist() == [4, 2, 0]
    assert counts["synthetic"].tolist() == [0, 0, 2]
    assert summaries["log_scale"] is True


def test_quality_grades():
    def report(mean_shift, std_shift):
        means = quality.Panel.build(["a"], [0.5], [0.5 + mean_shift])
        stds = quality.Panel.build(["a"], [0.2], [0.2 + std_shift])
        return quality.DimwiseReport(means=means, stds=stds)

    assert quality.generate_quality_report(report(0.01, 0.01))["score"] == "high"
    assert quality.generate_quality_report(report(0.07, 0.0))["score"] == "medium"
    assert quality.generate_quality_report(report(0.2, 0.0))["score"] == "low"

    demoted = report(0.0, 0.0)
    demoted.prediction = quality.Panel.build(["a"], [0.9], [0.5])
    graded = quality.generate_quality_report(demoted)
    assert graded["score"] == "medium"
    assert "Prediction" in graded["reason"]


def test_quality_files(tmp_path, toy_encoded):
    _, encoded, _ = toy_encoded
    report = quality.dimwise_prediction(encoded, encoded, seed=0)
    written = quality.write_quality_files(report, quality.univariate_summaries(encoded, encoded), tmp_path)
    for key in ("means", "stds", "prediction", "kde", "counts", "summary", "html"):
        assert written[key].exists()
    summary = json.loads((tmp_path / "quality.json").read_text())
    assert summary["score"] == "high"
    assert "plotly" in (tmp_path / "quality.html").read_text().lower()
