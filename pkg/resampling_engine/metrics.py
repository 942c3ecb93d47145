"""
Threshold-free evaluation metrics and test-set bootstrapping.
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.stats import rankdata

from resampling_engine.errors import MetricError

_logger = logging.getLogger(__name__)

MetricName = Literal["auc_roc", "auc_pr", "brier"]
HIGHER_IS_BETTER = {"auc_roc": True, "auc_pr": True, "brier": False}
DEFAULT_BOOTSTRAPS = 100


def _as_arrays(scores, labels):
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).astype(np.int64).ravel()
    if s.shape != y.shape:
        raise MetricError(f"{len(s)} scores but {len(y)} labels")
    return s, y


def auc_roc(scores, labels) -> float:
    """Probability that a random positive outscores a random negative; ties count one half."""
    s, y = _as_arrays(scores, labels)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC-ROC is undefined when only one class is present")
    ranks = rankdata(s, method="average")
    return float((ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def auc_pr(scores, labels) -> float:
    """Sum over descending unique thresholds of (recall gain) * precision, no interpolation."""
    s, y = _as_arrays(scores, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise MetricError("AUC-PR is undefined without positives")
    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    tp = np.cumsum(y_sorted)
    fp = np.cumsum(1 - y_sorted)
    # last position of each distinct score
    cut = np.r_[np.flatnonzero(np.diff(s_sorted)), len(s) - 1]
    tp, fp = tp[cut], fp[cut]
    recall = tp / n_pos
    precision = tp / (tp + fp)
    return float(np.sum(np.diff(np.r_[0.0, recall]) * precision))


def brier(scores, labels) -> float:
    s, y = _as_arrays(scores, labels)
    if len(s) == 0:
        raise MetricError("Brier score of an empty set")
    return float(np.mean((s - y) ** 2))


METRICS = {"auc_roc": auc_roc, "auc_pr": auc_pr, "brier": brier}


@dataclass(frozen=True)
class BootstrapResult:
    point: Dict[str, float]
    samples: Dict[str, np.ndarray]
    redraws: int


def bootstrap_metrics(scores, labels, B: int = DEFAULT_BOOTSTRAPS, rng=None,
                      max_redraws: int = 10_000) -> BootstrapResult:
    """
    Point metrics plus B n-out-of-n resamples of the (score, label) pairs.
    Resamples missing a class are redrawn; the redraw count is logged.

    Args:
        scores: Predicted P(positive) per test row.
        labels: 0/1 test labels.
        B: Number of resamples.
        rng: numpy Generator or seed.
        max_redraws: Give up after this many rejected resamples.
    """
    s, y = _as_arrays(scores, labels)
    n = len(s)
    if n == 0:
        raise MetricError("Cannot bootstrap an empty test set")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)

    point = {name: fn(s, y) for name, fn in METRICS.items()}
    samples = {name: np.empty(B) for name in METRICS}
    redraws = 0
    b = 0
    while b < B:
        idx = rng.integers(0, n, n)
        yb = y[idx]
        if yb.min() == yb.max():
            redraws += 1
            if redraws > max_redraws:
                raise MetricError(f"Gave up after {redraws} single-class bootstrap resamples")
            continue
        sb = s[idx]
        for name, fn in METRICS.items():
            samples[name][b] = fn(sb, yb)
        b += 1

    if redraws:
        _logger.warning("Bootstrap: %d resample(s) lacked a class and were redrawn", redraws)
    return BootstrapResult(point=point, samples=samples, redraws=redraws)


class MetricRecord(BaseModel):
    """One (dataset, seed, method, classifier, metric) cell."""
    model_config = ConfigDict(frozen=True)

    dataset: str
    seed: int
    method: str
    classifier: str
    metric: MetricName
    value: float
    bootstrap: List[float]
    flagged: bool = False

    @model_validator(mode="after")
    def _check_range(self):
        finite = [v for v in [self.value] + list(self.bootstrap) if math.isfinite(v)]
        if any(v < 0.0 or v > 1.0 for v in finite):
            raise ValueError(f"{self.metric} values must lie in [0, 1]")
        return self


def make_records(result: BootstrapResult, dataset: str, seed: int, method: str,
                 classifier: str) -> List[MetricRecord]:
    """One record per metric; non-finite values are flagged rather than dropped."""
    records = []
    for name in METRICS:
        values = [float(v) for v in result.samples[name]]
        value = float(result.point[name])
        flagged = not (math.isfinite(value) and all(math.isfinite(v) for v in values))
        records.append(MetricRecord(dataset=dataset, seed=seed, method=method, classifier=classifier,
                                    metric=name, value=value, bootstrap=values, flagged=flagged))
    return records
