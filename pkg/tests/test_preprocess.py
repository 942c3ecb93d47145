import numpy as np
import pandas as pd
import pytest

from resampling_engine.core.preprocess import (
    EncodedLayout,
    EncodedMatrix,
    PreprocessorModel,
    encode_mixed,
    fit_preprocessor,
    inverse_transform,
    transform,
)
from resampling_engine.errors import PreprocessError


def test_fitted_model_is_consistent(toy):
    frame, schema = toy
    pre = fit_preprocessor(frame, schema)
    for stats in pre.numeric.values():
        assert stats.min <= stats.max
    for span in pre.layout.spans:
        assert pre.modes[span.name] in span.categories
    covered = pre.layout.n_numeric + sum(s.width for s in pre.layout.spans)
    assert covered == pre.layout.width
    assert pre.target_labels == ("0", "1")


def test_transform_ranges(toy_encoded):
    _, encoded, _ = toy_encoded
    assert encoded.numeric.min() >= 0.0
    assert encoded.numeric.max() <= 1.0
    for span in encoded.layout.spans:
        np.testing.assert_allclose(encoded.values[:, span.slice].sum(axis=1), 1.0)


def test_mean_imputation_then_scaling(small_schema, small_frame):
    pre = fit_preprocessor(small_frame, small_schema)
    assert pre.numeric["amount"].mean == pytest.approx(3.0)
    encoded = transform(pre, small_frame.iloc[:3])
    np.testing.assert_allclose(encoded.numeric[:, 0], [0.0, 0.5, 0.5])

    frame = pd.DataFrame({"amount": [1.0, np.nan, 3.0], "colour": ["red"] * 3, "label": ["no", "yes", "no"]})
    pre = fit_preprocessor(frame, small_schema)
    np.testing.assert_allclose(transform(pre, frame).numeric[:, 0], [0.0, 0.5, 1.0])


def test_missing_category_takes_the_mode(small_schema, small_frame):
    pre = fit_preprocessor(small_frame, small_schema)
    assert pre.modes["colour"] == "green"
    encoded = transform(pre, small_frame)
    span = encoded.layout.spans[0]
    assert span.categories == ("red", "green", "blue")
    np.testing.assert_array_equal(encoded.values[3, span.slice], [0.0, 1.0, 0.0])


def test_labels_mark_the_positive_class(small_schema, small_frame):
    pre = fit_preprocessor(small_frame, small_schema)
    np.testing.assert_array_equal(transform(pre, small_frame).labels, [0, 0, 1, 1])


def test_round_trip_restores_the_imputed_table(toy):
    frame, schema = toy
    pre = fit_preprocessor(frame, schema)
    restored = inverse_transform(pre, transform(pre, frame))
    assert list(restored.columns) == list(frame.columns)
    np.testing.assert_allclose(restored["income"], frame["income"], atol=1e-9)
    np.testing.assert_allclose(restored["debt_ratio"], frame["debt_ratio"], atol=1e-9)
    assert restored["housing"].tolist() == frame["housing"].tolist()
    assert restored["default"].tolist() == frame["default"].tolist()


def test_constant_column_scales_to_zero(small_schema):
    frame = pd.DataFrame({"amount": [7.0, 7.0], "colour": ["red", "blue"], "label": ["no", "yes"]})
    pre = fit_preprocessor(frame, small_schema)
    assert pre.numeric["amount"].constant
    encoded = transform(pre, frame)
    np.testing.assert_array_equal(encoded.numeric[:, 0], [0.0, 0.0])
    assert inverse_transform(pre, encoded)["amount"].tolist() == [7.0, 7.0]


def test_test_fold_values_are_not_clipped(small_schema, small_frame):
    pre = fit_preprocessor(small_frame, small_schema)
    unseen = pd.DataFrame({"amount": [9.0], "colour": ["red"], "label": ["no"]})
    assert transform(pre, unseen).numeric[0, 0] == pytest.approx(2.0)


def test_unseen_category_maps_to_mode(toy, caplog):
    frame, schema = toy
    pre = fit_preprocessor(frame, schema)
    odd = frame.head(2).copy()
    odd.loc[odd.index[0], "housing"] = "boat"
    encoded = transform(pre, odd)
    span = pre.layout.spans[0]
    mode_index = span.categories.index(pre.modes["housing"])
    assert encoded.values[0, span.start + mode_index] == 1.0
    assert "unseen category" in caplog.text


def test_all_zero_span_cannot_be_decoded(toy_encoded):
    pre, encoded, _ = toy_encoded
    values = encoded.values[:3].copy()
    values[1, pre.layout.spans[0].slice] = 0.0
    with pytest.raises(PreprocessError, match="all-zero"):
        inverse_transform(pre, EncodedMatrix(values=values, layout=pre.layout))


def test_soft_span_decodes_by_argmax(toy_encoded):
    pre, encoded, _ = toy_encoded
    span = pre.layout.spans[0]
    values = encoded.values[:1].copy()
    values[0, span.slice] = [0.2, 0.5, 0.3]
    decoded = inverse_transform(pre, EncodedMatrix(values=values, layout=pre.layout))
    assert decoded["housing"].iloc[0] == span.categories[1]
    assert "default" not in decoded.columns


def test_width_mismatch_is_rejected(toy_encoded):
    pre, encoded, _ = toy_encoded
    with pytest.raises(PreprocessError):
        EncodedMatrix(values=encoded.values[:, :-1], layout=pre.layout)


def test_mixed_encoding_matches_one_hot(toy_encoded):
    _, encoded, mixed = toy_encoded
    again = encode_mixed(mixed)
    np.testing.assert_array_equal(again.values, encoded.values)
    np.testing.assert_array_equal(again.labels, encoded.labels)
    assert mixed.codes.shape == (encoded.n_rows, 1)


def test_empty_frame_is_rejected(small_schema, small_frame):
    with pytest.raises(PreprocessError):
        fit_preprocessor(small_frame.iloc[:0], small_schema)


def test_model_serialises(toy_encoded):
    pre, _, _ = toy_encoded
    restored = PreprocessorModel.from_dict(pre.to_dict())
    assert restored.layout == pre.layout
    assert restored.numeric == pre.numeric
    assert restored.target_labels == pre.target_labels
    assert EncodedLayout.from_dict(pre.layout.to_dict()).column_names() == pre.layout.column_names()
