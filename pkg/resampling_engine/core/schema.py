"""
Schema Module
Responsible for declaring column kinds, loading delimited tables against a
declared schema, and guessing kinds when no schema is available.
"""
import logging
from enum import Enum
from pathlib import Path
from typing import Dict, List, Literal, Optional

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

import settings
from resampling_engine.errors import ConfigError, SchemaError

_logger = logging.getLogger(__name__)

MAX_INFERRED_CATEGORIES = 20


class ColumnKind(str, Enum):
    NUMERICAL = "numerical"
    CATEGORICAL = "categorical"


class ColumnSpec(BaseModel):
    """One declared column. `categories` is optional; when absent the training fold decides."""
    model_config = ConfigDict(coerce_numbers_to_str=True, frozen=True)

    name: str
    kind: ColumnKind
    categories: Optional[List[str]] = None

    @field_validator("categories")
    @classmethod
    def _check_categories(cls, value):
        if value is None:
            return value
        if not value:
            raise ValueError("category list must be non-empty")
        if len(set(value)) != len(value):
            raise ValueError("category list contains duplicates")
        return value

    @model_validator(mode="after")
    def _numeric_without_categories(self):
        if self.kind == ColumnKind.NUMERICAL and self.categories is not None:
            raise ValueError(f"numerical column '{self.name}' cannot declare categories")
        return self


class DatasetSchema(BaseModel):
    """Declared layout of one tabular dataset.

    Attributes:
        name: Dataset name used in results and reports.
        path: Location of the delimited file (relative paths resolve against the config file).
        delimiter: Field separator of the file.
        columns: Ordered column declarations, target included.
        target: Name of the binary label column.
        positive_label: Label value of the minority (positive) class.
        missing_markers: Cell values read as missing, in addition to the empty string.
        unknown_category: What loading does with a value outside a declared category list.
        ignore_columns: File columns dropped on load.
    """
    model_config = ConfigDict(coerce_numbers_to_str=True, frozen=True)

    name: str = "dataset"
    path: Optional[str] = None
    delimiter: str = ","
    columns: List[ColumnSpec]
    target: str
    positive_label: str
    missing_markers: List[str] = Field(default_factory=lambda: list(settings.MISSING_MARKERS))
    unknown_category: Literal["error", "keep", "missing"] = "error"
    ignore_columns: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_target(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError("column names must be unique")
        if self.target not in names:
            raise ValueError(f"target column '{self.target}' is not declared")
        target = self.column(self.target)
        if target.kind != ColumnKind.CATEGORICAL:
            raise ValueError(f"target column '{self.target}' must be categorical")
        if target.categories is not None:
            if len(target.categories) != 2:
                raise ValueError(f"target column '{self.target}' must have exactly 2 labels")
            if self.positive_label not in target.categories:
                raise ValueError(f"positive label '{self.positive_label}' is not a target label")
        return self

    def column(self, name: str) -> ColumnSpec:
        for col in self.columns:
            if col.name == name:
                return col
        raise KeyError(name)

    @property
    def column_names(self) -> List[str]:
        return [c.name for c in self.columns]

    @property
    def feature_columns(self) -> List[ColumnSpec]:
        return [c for c in self.columns if c.name != self.target]

    @property
    def numerical_columns(self) -> List[str]:
        return [c.name for c in self.feature_columns if c.kind == ColumnKind.NUMERICAL]

    @property
    def categorical_columns(self) -> List[str]:
        return [c.name for c in self.feature_columns if c.kind == ColumnKind.CATEGORICAL]

    @classmethod
    def from_yaml(cls, path) -> "DatasetSchema":
        """Load and validate a schema config file."""
        path = Path(path)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = yaml.safe_load(fh) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"Could not read schema config '{path}': {e}") from e
        return cls.from_dict(raw, base_dir=path.parent)

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path = None) -> "DatasetSchema":
        raw = dict(raw)
        if raw.get("path") and base_dir is not None and not Path(raw["path"]).is_absolute():
            raw["path"] = str(Path(base_dir) / raw["path"])
        try:
            return cls.model_validate(raw)
        except ValidationError as e:
            raise ConfigError(f"Invalid dataset schema: {e}") from e


def load_dataset(path=None, schema: DatasetSchema = None) -> pd.DataFrame:
    """
    Read a delimited table and check it against the schema.

    Numerical columns come back as floats, categorical columns as strings,
    missing cells as NaN. Row count is preserved.

    Raises:
        SchemaError: unknown or missing column, unparseable numeric cell,
            unknown category (when the schema's policy is "error") or bad target labels.
    """
    path = path or schema.path
    if path is None:
        raise SchemaError(f"No dataset path given for schema '{schema.name}'")

    # 1. Read raw text
    try:
        df = pd.read_csv(path, sep=schema.delimiter, dtype=str, keep_default_na=False)
    except (OSError, ValueError, pd.errors.ParserError) as e:
        raise SchemaError(f"Could not read dataset '{path}': {e}") from e

    # 2. Header check
    df.columns = [str(c).strip() for c in df.columns]
    expected = schema.column_names
    unknown = [c for c in df.columns if c not in expected and c not in schema.ignore_columns]
    if unknown:
        raise SchemaError(f"Unknown column(s) in '{path}': {unknown}")
    absent = [c for c in expected if c not in df.columns]
    if absent:
        raise SchemaError(f"Column(s) declared but absent from '{path}': {absent}")
    df = df[expected].copy()

    # 3. Missing markers
    markers = set([""] + list(schema.missing_markers))
    for col in df.columns:
        stripped = df[col].str.strip()
        df[col] = stripped.mask(stripped.isin(markers))

    # 4. Numerical columns
    for name in schema.numerical_columns:
        parsed = pd.to_numeric(df[name], errors="coerce")
        bad = parsed.isna() & df[name].notna()
        if bad.any():
            sample = df.loc[bad, name].unique()[:5].tolist()
            raise SchemaError(f"Unparseable numeric cell(s) in column '{name}': {sample}")
        df[name] = parsed.astype(float)

    # 5. Categorical columns with declared vocabularies
    for spec in schema.columns:
        if spec.kind != ColumnKind.CATEGORICAL or spec.categories is None:
            continue
        outside = df[spec.name].notna() & ~df[spec.name].isin(spec.categories)
        if not outside.any():
            continue
        values = sorted(df.loc[outside, spec.name].unique().tolist())
        if spec.name == schema.target or schema.unknown_category == "error":
            raise SchemaError(f"Unknown category value(s) in column '{spec.name}': {values}")
        if schema.unknown_category == "missing":
            df.loc[outside, spec.name] = np.nan
            _logger.warning("Column '%s': %d unknown category cell(s) %s set to missing",
                            spec.name, int(outside.sum()), values)
        else:
            _logger.warning("Column '%s': %d unknown category cell(s) %s kept",
                            spec.name, int(outside.sum()), values)

    # 6. Target
    _check_target_column(df, schema)

    _logger.info("Loaded '%s': %d rows, %d numerical + %d categorical features",
                 schema.name, len(df), len(schema.numerical_columns), len(schema.categorical_columns))
    return df


def _check_target_column(df: pd.DataFrame, schema: DatasetSchema):
    target = df[schema.target]
    if target.isna().any():
        raise SchemaError(f"Target column '{schema.target}' has {int(target.isna().sum())} missing label(s)")
    labels = set(target.unique().tolist())
    if len(labels) > 2:
        raise SchemaError(f"Target column '{schema.target}' has more than 2 labels: {sorted(labels)}")
    if len(df) and schema.positive_label not in labels:
        _logger.warning("No rows with positive label '%s' in '%s'", schema.positive_label, schema.name)


def infer_schema(frame: pd.DataFrame, target: str, positive_label: str,
                 declared: Optional[Dict[str, ColumnKind]] = None,
                 name: str = "dataset",
                 max_categories: int = MAX_INFERRED_CATEGORIES) -> DatasetSchema:
    """
    Guess column kinds from raw text values.
    Numeric-parsable columns become numerical, other columns with at most
    `max_categories` distinct values become categorical, the rest are skipped.
    Kinds in `declared` always win.
    """
    declared = declared or {}
    if target not in frame.columns:
        raise SchemaError(f"Target column '{target}' not found")

    columns, skipped = [], []
    for col in frame.columns:
        if col == target:
            columns.append(ColumnSpec(name=col, kind=ColumnKind.CATEGORICAL))
            continue
        if col in declared:
            columns.append(ColumnSpec(name=col, kind=ColumnKind(declared[col])))
            continue

        values = frame[col].dropna()
        parsed = pd.to_numeric(values, errors="coerce")
        if len(values) and parsed.notna().all():
            columns.append(ColumnSpec(name=col, kind=ColumnKind.NUMERICAL))
        elif values.nunique() <= max_categories:
            columns.append(ColumnSpec(name=col, kind=ColumnKind.CATEGORICAL))
        else:
            _logger.warning("Skipping column '%s': %d distinct non-numeric values", col, values.nunique())
            skipped.append(col)

    return DatasetSchema(name=name, columns=columns, target=target,
                         positive_label=str(positive_label), ignore_columns=skipped)
