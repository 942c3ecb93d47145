import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.spatial.distance import cdist
from scipy.stats import chisquare

from resampling_engine.baselines import (
    OversampleMethod,
    adasyn,
    adasyn_allocation,
    borderline_smote,
    borderline_status,
    minority_median_std,
    nc_distance_matrix,
    nominal_mode,
    oversample,
    random_oversample,
    smote,
    smote_nc,
)
from resampling_engine.core.preprocess import EncodedLayout, EncodedMatrix
from resampling_engine.errors import OversampleError

NON_GAN_TAGS = ["none", "random", "smote", "smote_nc", "b_smote", "adasyn"]


def _counts(labels):
    return int((labels == 0).sum()), int((labels == 1).sum())


# ============== PARITY ==============

@pytest.mark.parametrize("tag", NON_GAN_TAGS)
def test_methods_balance_and_keep_originals_first(toy_encoded, tag):
    _, encoded, mixed = toy_encoded
    result = oversample(OversampleMethod(tag=tag), encoded, seed=1, mixed=mixed)
    n = encoded.n_rows
    np.testing.assert_array_equal(result.data.values[:n], encoded.values)
    np.testing.assert_array_equal(result.data.labels[:n], encoded.labels)
    if tag == "none":
        assert result.n_synthetic == 0
        assert result.data is encoded
        return
    neg, pos = _counts(result.data.labels)
    assert neg == pos
    assert result.n_synthetic == neg - int(encoded.labels.sum())
    assert (result.data.labels[n:] == 1).all()


@pytest.mark.parametrize("tag", ["random", "smote", "smote_nc", "b_smote", "adasyn"])
def test_methods_are_seeded(toy_encoded, tag):
    _, encoded, mixed = toy_encoded
    method = OversampleMethod(tag=tag)
    a = oversample(method, encoded, seed=5, mixed=mixed).data.values
    b = oversample(method, encoded, seed=5, mixed=mixed).data.values
    np.testing.assert_array_equal(a, b)


def test_cwgan_balances_and_records_its_settings(toy_encoded, tiny_config):
    pre, encoded, _ = toy_encoded
    result = oversample(OversampleMethod(tag="cwgan", gan=tiny_config), encoded, seed=2, preprocessor=pre)
    neg, pos = _counts(result.data.labels)
    assert neg == pos
    assert result.gan is not None
    assert result.details["selected"]["epochs"] == tiny_config.epochs


def test_balanced_input_is_returned_unchanged():
    layout = EncodedLayout(("a",), ())
    encoded = EncodedMatrix(values=np.arange(4.0).reshape(4, 1), layout=layout, labels=np.array([0, 1, 0, 1]))
    result = oversample(OversampleMethod(tag="smote", k_neighbours=1), encoded, seed=0)
    assert result.n_synthetic == 0


def test_single_class_input_is_rejected(toy_encoded):
    _, encoded, _ = toy_encoded
    negatives = encoded.subset(np.flatnonzero(encoded.labels == 0))
    with pytest.raises(OversampleError):
        oversample(OversampleMethod(tag="random"), negatives, seed=0)


def test_minority_may_be_the_zero_label():
    layout = EncodedLayout(("a", "b"), ())
    rng = np.random.default_rng(0)
    labels = np.array([1] * 20 + [0] * 8)
    encoded = EncodedMatrix(values=rng.random((28, 2)), layout=layout, labels=labels)
    result = oversample(OversampleMethod(tag="smote"), encoded, seed=0)
    assert _counts(result.data.labels) == (20, 20)


# ============== INTERPOLATION ==============

def _on_segment(result, X_min):
    base, nb = X_min[result.base], X_min[result.neighbour]
    assert ((result.gap >= 0) & (result.gap <= 1)).all()
    np.testing.assert_allclose(result.rows, base + result.gap[:, None] * (nb - base), atol=1e-9)


def test_smote_rows_lie_between_neighbours():
    X_min = np.random.default_rng(0).random((12, 3))
    result = smote(X_min, 40, k=5, rng=np.random.default_rng(1))
    assert result.rows.shape == (40, 3)
    _on_segment(result, X_min)
    assert (result.base != result.neighbour).all()


def test_smote_needs_k_plus_one_rows():
    with pytest.raises(OversampleError, match="k\\+1"):
        smote(np.zeros((5, 2)), 3, k=5, rng=np.random.default_rng(0))


def test_random_oversample_copies_minority_rows():
    X = np.arange(10.0).reshape(10, 1)
    y = np.array([0] * 7 + [1] * 3)
    rows, source = random_oversample(X, y, np.random.default_rng(0))
    assert len(rows) == 4
    assert set(source) <= {7, 8, 9}
    np.testing.assert_array_equal(rows, X[source])


# ============== SMOTENC ==============

def test_nominal_distance():
    dist = nc_distance_matrix([0.0], [[0, 1]], [0.0], [[1, 0]], med_std=0.5)
    assert dist[0, 0] == pytest.approx(math.sqrt(0.5))
    same = nc_distance_matrix([[0.0, 3.0]], [[2]], [[4.0, 0.0]], [[2]], med_std=0.5)
    assert same[0, 0] == pytest.approx(5.0)


def test_median_std():
    numeric = np.array([[0.0, 0.0, 1.0], [2.0, 1.0, 1.0]])
    assert minority_median_std(numeric) == pytest.approx(0.5)
    assert minority_median_std(np.zeros((3, 0))) == 0.0


def test_nominal_mode_tie_break():
    assert nominal_mode(np.array([2, 0, 2, 0]), categories=["b", "c", "a"]) == 2
    assert nominal_mode(np.array([2, 0, 2, 0])) == 0
    assert nominal_mode(np.array([1, 1, 0])) == 1


def test_smote_nc_takes_neighbour_modes():
    rng = np.random.default_rng(0)
    numeric = rng.random((10, 2))
    codes = np.zeros((10, 1), dtype=np.int64)
    codes[0] = 1
    result = smote_nc(numeric, codes, 30, k=3, rng=np.random.default_rng(2))
    assert result.codes.shape == (30, 1)
    assert (result.codes == 0).all()
    base, nb = numeric[result.base], numeric[result.neighbour]
    np.testing.assert_allclose(result.numeric, base + result.gap[:, None] * (nb - base), atol=1e-9)


def test_smote_nc_requires_categoricals():
    with pytest.raises(OversampleError, match="categorical"):
        smote_nc(np.zeros((6, 2)), np.zeros((6, 0)), 2, k=3, rng=np.random.default_rng(0))


def test_oversample_smote_nc_on_numeric_only_data():
    layout = EncodedLayout(("a",), ())
    encoded = EncodedMatrix(values=np.arange(10.0).reshape(10, 1), layout=layout,
                            labels=np.array([0] * 7 + [1] * 3))
    with pytest.raises(OversampleError):
        oversample(OversampleMethod(tag="smote_nc", k_neighbours=1), encoded, seed=0)


# ============== BORDERLINE-SMOTE / ADASYN ==============

def test_borderline_status():
    status = borderline_status(np.array([0.0, 0.4, 0.5, 0.9, 1.0]))
    assert status.tolist() == ["safe", "safe", "danger", "danger", "noise"]


def _overlapping(seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0.0, 1.0, (60, 2)), rng.normal(1.0, 1.0, (15, 2))])
    y = np.array([0] * 60 + [1] * 15)
    return X, y


def test_borderline_smote_interpolates_minority_rows():
    X, y = _overlapping()
    result = borderline_smote(X, y, k=5, m=10, rng=np.random.default_rng(0))
    assert len(result.rows) == 45
    _on_segment(result, X[y == 1])


def test_borderline_smote_falls_back_without_danger(caplog):
    rng = np.random.default_rng(0)
    X = np.vstack([rng.random((14, 2)), 100 + rng.random((6, 2))])
    y = np.array([0] * 14 + [1] * 6)
    result = borderline_smote(X, y, k=2, m=3, rng=np.random.default_rng(0))
    assert len(result.rows) == 8
    assert "falling back to SMOTE" in caplog.text


def test_borderline_smote_requires_m_at_least_k():
    with pytest.raises(ValidationError):
        OversampleMethod(tag="b_smote", k_neighbours=5, m_neighbours=3)


def test_adasyn_allocation():
    np.testing.assert_array_equal(adasyn_allocation(np.array([1, 3]), 4), [1, 3])
    np.testing.assert_array_equal(adasyn_allocation(np.array([1, 1, 1]), 2), [1, 1, 0])
    np.testing.assert_array_equal(adasyn_allocation(np.array([0, 2, 1]), 5), [0, 4, 1])
    with pytest.raises(OversampleError):
        adasyn_allocation(np.array([0, 0]), 3)


def test_adasyn_interpolates_minority_rows():
    X, y = _overlapping(1)
    result = adasyn(X, y, k=5, rng=np.random.default_rng(0))
    assert len(result.rows) == 45
    _on_segment(result, X[y == 1])


def test_adasyn_falls_back_when_classes_are_apart(caplog):
    X = np.vstack([np.random.default_rng(0).random((12, 2)), 100 + np.random.default_rng(1).random((6, 2))])
    y = np.array([0] * 12 + [1] * 6)
    result = adasyn(X, y, k=3, rng=np.random.default_rng(0))
    assert len(result.rows) == 6
    assert "falling back to SMOTE" in caplog.text


# ============== SAMPLING LAWS ==============

def _within_k_nearest(result, X_min, k):
    dist = cdist(X_min, X_min)
    np.fill_diagonal(dist, np.inf)
    kth = np.sort(dist, axis=1)[:, k - 1]
    assert (dist[result.base, result.neighbour] <= kth[result.base] + 1e-12).all()


def _random_minority_set(rng):
    n_min = int(rng.integers(6, 16))
    n_maj = n_min + int(rng.integers(1, 20))
    X = np.vstack([rng.normal(0.0, 1.0, (n_maj, 2)), rng.normal(0.8, 1.0, (n_min, 2))])
    y = np.array([0] * n_maj + [1] * n_min)
    return X, y


@pytest.mark.parametrize("tag", ["smote", "b_smote", "adasyn"])
def test_synthetic_rows_stay_on_neighbour_segments(tag):
    rng = np.random.default_rng(11)
    k = 3
    for _ in range(500):
        X, y = _random_minority_set(rng)
        X_min = X[y == 1]
        draw = np.random.default_rng(int(rng.integers(0, 2**31)))
        if tag == "smote":
            result = smote(X_min, 10, k=k, rng=draw)
        elif tag == "b_smote":
            result = borderline_smote(X, y, k=k, m=5, rng=draw)
        else:
            result = adasyn(X, y, k=k, rng=draw)
        if tag != "smote":
            assert len(result.rows) == (y == 0).sum() - (y == 1).sum()
        _on_segment(result, X_min)
        _within_k_nearest(result, X_min, k)


def test_identical_minority_rows_yield_that_row():
    point = np.array([0.3, 0.7, 0.1])
    X_min = np.tile(point, (6, 1))
    result = smote(X_min, 50, k=5, rng=np.random.default_rng(0))
    np.testing.assert_allclose(result.rows, np.tile(point, (50, 1)))


def test_random_oversample_draws_sources_uniformly():
    X = np.arange(60.0).reshape(60, 1)
    y = np.array([0] * 50 + [1] * 10)
    _, source = random_oversample(X, y, np.random.default_rng(3), n_new=5000)
    counts = np.bincount(source - 50, minlength=10)
    assert counts.sum() == 5000
    assert chisquare(counts).pvalue > 0.001
