"""
Preprocessing Module
Responsible for mean/mode imputation, min-max scaling and one-hot encoding,
and for mapping encoded rows back to the raw table.
"""
import logging
from dataclasses import asdict, dataclass, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from resampling_engine.core.schema import DatasetSchema
from resampling_engine.errors import PreprocessError

_logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NumericStats:
    mean: float
    min: float
    max: float

    @property
    def constant(self) -> bool:
        return self.max == self.min


@dataclass(frozen=True)
class CategoricalSpan:
    """Contiguous one-hot columns of one categorical variable."""
    name: str
    start: int
    stop: int
    categories: Tuple[str, ...]

    @property
    def width(self) -> int:
        return self.stop - self.start

    @property
    def slice(self) -> slice:
        return slice(self.start, self.stop)


@dataclass(frozen=True)
class EncodedLayout:
    """Numeric block first, then one span per categorical column, in schema order."""
    numeric_columns: Tuple[str, ...]
    spans: Tuple[CategoricalSpan, ...]

    @property
    def n_numeric(self) -> int:
        return len(self.numeric_columns)

    @property
    def width(self) -> int:
        return self.n_numeric + sum(s.width for s in self.spans)

    def column_names(self) -> List[str]:
        names = list(self.numeric_columns)
        for span in self.spans:
            names.extend(f"{span.name}={cat}" for cat in span.categories)
        return names

    def to_dict(self) -> dict:
        return {
            "numeric_columns": list(self.numeric_columns),
            "spans": [
                {"name": s.name, "start": s.start, "stop": s.stop, "categories": list(s.categories)}
                for s in self.spans
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EncodedLayout":
        spans = tuple(
            CategoricalSpan(s["name"], int(s["start"]), int(s["stop"]), tuple(s["categories"]))
            for s in data["spans"]
        )
        return cls(tuple(data["numeric_columns"]), spans)


@dataclass(frozen=True)
class EncodedMatrix:
    """Model-space rows. `labels` is 1 for the positive (minority) class, None when unlabelled."""
    values: np.ndarray
    layout: EncodedLayout
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != self.layout.width:
            raise PreprocessError(
                f"Encoded values of shape {self.values.shape} do not match layout width {self.layout.width}"
            )
        if self.labels is not None and len(self.labels) != len(self.values):
            raise PreprocessError("labels and values have different row counts")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def numeric(self) -> np.ndarray:
        return self.values[:, :self.layout.n_numeric]

    def subset(self, rows) -> "EncodedMatrix":
        labels = None if self.labels is None else self.labels[rows]
        return replace(self, values=self.values[rows], labels=labels)


@dataclass(frozen=True)
class MixedMatrix:
    """Imputed and scaled numerics plus integer category codes (one column per categorical)."""
    numeric: np.ndarray
    codes: np.ndarray
    layout: EncodedLayout
    labels: Optional[np.ndarray] = None

    @property
    def n_rows(self) -> int:
        return self.numeric.shape[0]


@dataclass(frozen=True)
class PreprocessorModel:
    schema: DatasetSchema
    numeric: Dict[str, NumericStats]
    modes: Dict[str, str]
    layout: EncodedLayout
    target_labels: Tuple[str, str]  # (negative, positive)

    @property
    def positive_label(self) -> str:
        return self.target_labels[1]

    def to_dict(self) -> dict:
        return {
            "schema": self.schema.model_dump(mode="json"),
            "numeric": {name: asdict(stats) for name, stats in self.numeric.items()},
            "modes": dict(self.modes),
            "layout": self.layout.to_dict(),
            "target_labels": list(self.target_labels),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PreprocessorModel":
        return cls(
            schema=DatasetSchema.model_validate(data["schema"]),
            numeric={name: NumericStats(**stats) for name, stats in data["numeric"].items()},
            modes=dict(data["modes"]),
            layout=EncodedLayout.from_dict(data["layout"]),
            target_labels=tuple(data["target_labels"]),
        )


def fit_preprocessor(frame: pd.DataFrame, schema: DatasetSchema) -> PreprocessorModel:
    """
    Learn imputation values, scaling ranges and category vocabularies from a (training) frame.

    Numeric min/max are taken after mean imputation. Category lists come from the
    schema when declared, otherwise from the frame in sorted order.
    """
    if frame.empty:
        raise PreprocessError("Cannot fit preprocessor on an empty frame")

    # 1. Numerical columns
    numeric = {}
    for name in schema.numerical_columns:
        values = frame[name].astype(float)
        if values.isna().all():
            raise PreprocessError(f"Column '{name}' has no non-missing values")
        mean = float(values.mean())
        imputed = values.fillna(mean)
        stats = NumericStats(mean=mean, min=float(imputed.min()), max=float(imputed.max()))
        if stats.constant:
            _logger.warning("Column '%s' is constant (%s) and will be scaled to 0", name, stats.min)
        numeric[name] = stats

    # 2. Categorical columns
    modes, spans = {}, []
    offset = len(numeric)
    for name in schema.categorical_columns:
        values = frame[name].dropna().astype(str)
        if values.empty:
            raise PreprocessError(f"Column '{name}' has no non-missing values")
        declared = schema.column(name).categories
        categories = tuple(declared) if declared else tuple(sorted(values.unique()))
        counts = values[values.isin(categories)].value_counts()
        if counts.empty:
            raise PreprocessError(f"Column '{name}' has no values inside its category list")
        top = counts.max()
        modes[name] = next(c for c in categories if counts.get(c, 0) == top)
        spans.append(CategoricalSpan(name, offset, offset + len(categories), categories))
        offset += len(categories)

    # 3. Target labels
    target_labels = _target_labels(frame, schema)

    layout = EncodedLayout(tuple(numeric), tuple(spans))
    return PreprocessorModel(schema=schema, numeric=numeric, modes=modes,
                             layout=layout, target_labels=target_labels)


def _target_labels(frame: pd.DataFrame, schema: DatasetSchema) -> Tuple[str, str]:
    positive = schema.positive_label
    declared = schema.column(schema.target).categories
    candidates = declared if declared else sorted(frame[schema.target].dropna().astype(str).unique())
    negatives = [c for c in candidates if c != positive]
    if len(negatives) != 1:
        raise PreprocessError(
            f"Target '{schema.target}' needs exactly one label besides '{positive}', found {negatives}"
        )
    return negatives[0], positive


def _check_columns(pre: PreprocessorModel, frame: pd.DataFrame):
    needed = list(pre.layout.numeric_columns) + [s.name for s in pre.layout.spans]
    absent = [c for c in needed if c not in frame.columns]
    if absent:
        raise PreprocessError(f"Frame lacks fitted column(s): {absent}")


def _scaled_numeric(pre: PreprocessorModel, frame: pd.DataFrame) -> np.ndarray:
    out = np.zeros((len(frame), pre.layout.n_numeric))
    for j, name in enumerate(pre.layout.numeric_columns):
        stats = pre.numeric[name]
        if stats.constant:
            continue
        col = frame[name].astype(float).fillna(stats.mean).to_numpy()
        out[:, j] = (col - stats.min) / (stats.max - stats.min)
    return out


def _category_codes(pre: PreprocessorModel, frame: pd.DataFrame) -> np.ndarray:
    codes = np.zeros((len(frame), len(pre.layout.spans)), dtype=np.int64)
    for i, span in enumerate(pre.layout.spans):
        mode = pre.modes[span.name]
        lookup = {cat: idx for idx, cat in enumerate(span.categories)}
        filled = frame[span.name].fillna(mode).astype(str)
        mapped = filled.map(lookup)
        unseen = mapped.isna()
        if unseen.any():
            sample = sorted(filled[unseen].unique().tolist())[:5]
            _logger.warning("Column '%s': %d unseen category cell(s) %s mapped to mode '%s'",
                            span.name, int(unseen.sum()), sample, mode)
            mapped = mapped.fillna(lookup[mode])
        codes[:, i] = mapped.to_numpy(dtype=np.int64)
    return codes


def _labels(pre: PreprocessorModel, frame: pd.DataFrame) -> Optional[np.ndarray]:
    target = pre.schema.target
    if target not in frame.columns:
        return None
    series = frame[target]
    if series.isna().any():
        raise PreprocessError(f"Target column '{target}' has missing labels")
    series = series.astype(str)
    unknown = set(series.unique()) - set(pre.target_labels)
    if unknown:
        raise PreprocessError(f"Target column '{target}' has unknown label(s): {sorted(unknown)}")
    return (series == pre.positive_label).to_numpy().astype(np.int64)


def _one_hot(codes: np.ndarray, layout: EncodedLayout) -> np.ndarray:
    n = codes.shape[0]
    out = np.zeros((n, layout.width - layout.n_numeric))
    rows = np.arange(n)
    for i, span in enumerate(layout.spans):
        out[rows, span.start - layout.n_numeric + codes[:, i]] = 1.0
    return out


def transform(pre: PreprocessorModel, frame: pd.DataFrame) -> EncodedMatrix:
    """
    Encode a raw frame: impute, min-max scale (no clipping), one-hot encode.
    Unseen categories map to the fitted mode with a warning.
    """
    _check_columns(pre, frame)
    numeric = _scaled_numeric(pre, frame)
    codes = _category_codes(pre, frame)
    values = np.hstack([numeric, _one_hot(codes, pre.layout)])
    return EncodedMatrix(values=values, layout=pre.layout, labels=_labels(pre, frame))


def transform_mixed(pre: PreprocessorModel, frame: pd.DataFrame) -> MixedMatrix:
    """Same as transform, but categoricals stay as integer codes."""
    _check_columns(pre, frame)
    return MixedMatrix(numeric=_scaled_numeric(pre, frame), codes=_category_codes(pre, frame),
                       layout=pre.layout, labels=_labels(pre, frame))


def encode_mixed(mixed: MixedMatrix) -> EncodedMatrix:
    """One-hot encode the codes of a mixed matrix into the standard layout."""
    values = np.hstack([mixed.numeric, _one_hot(mixed.codes, mixed.layout)])
    return EncodedMatrix(values=values, layout=mixed.layout, labels=mixed.labels)


def inverse_transform(pre: PreprocessorModel, matrix: EncodedMatrix) -> pd.DataFrame:
    """
    Map encoded rows back to the raw table. Categoricals take the argmax of their span;
    the target column is attached when the matrix carries labels.

    Raises:
        PreprocessError: layout mismatch or a span that is all zeros.
    """
    if matrix.layout != pre.layout:
        raise PreprocessError("Matrix layout does not match the fitted layout")

    values = matrix.values
    n = matrix.n_rows
    data = {}
    for j, name in enumerate(pre.layout.numeric_columns):
        stats = pre.numeric[name]
        if stats.constant:
            data[name] = np.full(n, stats.min)
        else:
            data[name] = values[:, j] * (stats.max - stats.min) + stats.min

    for span in pre.layout.spans:
        block = values[:, span.slice]
        degenerate = np.all(block == 0, axis=1)
        if degenerate.any():
            raise PreprocessError(
                f"Column '{span.name}': {int(degenerate.sum())} row(s) with an all-zero one-hot span"
            )
        categories = np.asarray(span.categories, dtype=object)
        data[span.name] = categories[block.argmax(axis=1)]

    if matrix.labels is not None:
        negative, positive = pre.target_labels
        data[pre.schema.target] = np.where(matrix.labels == 1, positive, negative).astype(object)

    columns = [c for c in pre.schema.column_names if c in data]
    return pd.DataFrame(data, columns=columns)
