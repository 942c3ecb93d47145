"""
Synthetic credit-style dataset for desk-scale checks.
"""
import logging
from typing import Tuple

import numpy as np
import pandas as pd

from resampling_engine.core.schema import ColumnKind, ColumnSpec, DatasetSchema

_logger = logging.getLogger(__name__)

TOY_CATEGORIES = ("own", "rent", "free")

# per class: mixture weights, component means and sds of (income, debt_ratio)
_MIXTURES = {
    0: {"weights": (0.6, 0.4), "means": ((55.0, 0.25), (90.0, 0.15)), "sds": ((8.0, 0.05), (12.0, 0.04))},
    1: {"weights": (0.7, 0.3), "means": ((35.0, 0.45), (70.0, 0.30)), "sds": ((7.0, 0.06), (10.0, 0.05))},
}
_HOUSING = {0: (0.55, 0.35, 0.10), 1: (0.25, 0.55, 0.20)}


def toy_schema(path: str = None, name: str = "toy_credit") -> DatasetSchema:
    return DatasetSchema(
        name=name,
        path=path,
        columns=[
            ColumnSpec(name="income", kind=ColumnKind.NUMERICAL),
            ColumnSpec(name="debt_ratio", kind=ColumnKind.NUMERICAL),
            ColumnSpec(name="housing", kind=ColumnKind.CATEGORICAL, categories=list(TOY_CATEGORIES)),
            ColumnSpec(name="default", kind=ColumnKind.CATEGORICAL, categories=["0", "1"]),
        ],
        target="default",
        positive_label="1",
    )


def make_toy_credit(n_rows: int = 2000, minority_share: float = 0.2,
                    seed: int = 0) -> Tuple[pd.DataFrame, DatasetSchema]:
    """
    Two numeric columns drawn from a two-component Gaussian mixture per class and one
    three-category column whose frequencies depend on the class.

    Returns:
        (frame, schema); the label column holds "1" for the minority class.
    """
    if not 0.0 < minority_share < 1.0:
        raise ValueError(f"minority_share must lie in (0, 1), got {minority_share}")
    rng = np.random.default_rng(seed)
    n_pos = int(round(n_rows * minority_share))
    if n_pos < 1 or n_pos >= n_rows:
        raise ValueError(f"{n_rows} rows with share {minority_share} leave a class empty")

    parts = []
    for label, count in ((0, n_rows - n_pos), (1, n_pos)):
        mix = _MIXTURES[label]
        component = rng.choice(len(mix["weights"]), size=count, p=mix["weights"])
        means = np.asarray(mix["means"])[component]
        sds = np.asarray(mix["sds"])[component]
        numeric = rng.normal(means, sds)
        housing = rng.choice(TOY_CATEGORIES, size=count, p=_HOUSING[label])
        parts.append(pd.DataFrame({
            "income": np.round(np.maximum(numeric[:, 0], 1.0), 2),
            "debt_ratio": np.round(np.clip(numeric[:, 1], 0.0, 1.0), 4),
            "housing": housing,
            "default": str(label),
        }))

    frame = pd.concat(parts, ignore_index=True)
    frame = frame.iloc[rng.permutation(len(frame))].reset_index(drop=True)
    _logger.info("Toy credit data: %d rows, %d minority", len(frame), n_pos)
    return frame, toy_schema()
