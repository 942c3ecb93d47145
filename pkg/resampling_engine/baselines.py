"""
Oversampling Module
Responsible for balancing a training set to parity: random duplication,
SMOTE, SMOTENC, Borderline-SMOTE, ADASYN and the conditional WGAN.
"""
import logging
from dataclasses import dataclass, field
from typing import Literal, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.spatial.distance import cdist

from resampling_engine.core.preprocess import EncodedMatrix, MixedMatrix, PreprocessorModel, encode_mixed
from resampling_engine.errors import OversampleError
from resampling_engine.gan.config import GanConfig, GridSpec
from resampling_engine.gan.search import grid_search
from resampling_engine.gan.training import TrainedGan, sample_encoded, train_cwgan
from resampling_engine.seeding import derive_seed

_logger = logging.getLogger(__name__)

MethodTag = Literal["none", "random", "smote", "smote_nc", "b_smote", "adasyn", "cwgan"]


class OversampleMethod(BaseModel):
    """A resampling strategy and its parameters. `name` labels results (defaults to the tag)."""
    model_config = ConfigDict(frozen=True)

    tag: MethodTag
    name: Optional[str] = None
    k_neighbours: int = Field(5, ge=1)
    m_neighbours: int = Field(10, ge=1)
    gan: Optional[GanConfig] = None
    grid: Optional[GridSpec] = None

    @model_validator(mode="after")
    def _check(self):
        if self.tag == "b_smote" and self.m_neighbours < self.k_neighbours:
            raise ValueError("m_neighbours must be at least k_neighbours for b_smote")
        return self

    @property
    def label(self) -> str:
        return self.name or self.tag

    @property
    def gan_config(self) -> GanConfig:
        return self.gan or GanConfig()


class Interpolation(NamedTuple):
    """Synthetic rows and their parents (indices into the minority rows) with the gap drawn for each."""
    rows: np.ndarray
    base: np.ndarray
    neighbour: np.ndarray
    gap: np.ndarray


class NominalInterpolation(NamedTuple):
    numeric: np.ndarray
    codes: np.ndarray
    base: np.ndarray
    neighbour: np.ndarray
    gap: np.ndarray


@dataclass
class OversampleResult:
    data: EncodedMatrix
    n_synthetic: int
    details: dict = field(default_factory=dict)
    gan: Optional[TrainedGan] = None


def _minority(labels: np.ndarray) -> Tuple[int, int]:
    """(minority label, rows needed for parity). Equal counts give label 1 and 0 rows."""
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise OversampleError("Oversampling needs both classes present")
    return (1, n_neg - n_pos) if n_pos <= n_neg else (0, n_pos - n_neg)


def _neighbours(query: np.ndarray, reference: np.ndarray, k: int,
                self_index: Optional[np.ndarray] = None, sq_dist: Optional[np.ndarray] = None) -> np.ndarray:
    """Indices of the k nearest reference rows per query row; ties resolve to the lower row index."""
    dist = cdist(query, reference, "sqeuclidean") if sq_dist is None else sq_dist.copy()
    if self_index is not None:
        dist[np.arange(len(query)), self_index] = np.inf
    return np.argsort(dist, axis=1, kind="stable")[:, :k]


def _interpolate(X_min: np.ndarray, nn: np.ndarray, base: np.ndarray, rng: np.random.Generator) -> Interpolation:
    neighbour = nn[base, rng.integers(0, nn.shape[1], len(base))]
    gap = rng.random(len(base))
    rows = X_min[base] + gap[:, None] * (X_min[neighbour] - X_min[base])
    return Interpolation(rows, base, neighbour, gap)


def _require_neighbours(n_rows: int, k: int, what: str):
    if n_rows < k + 1:
        raise OversampleError(f"{what} needs at least k+1={k + 1} minority rows, got {n_rows}")


def random_oversample(X: np.ndarray, y: np.ndarray, rng: np.random.Generator,
                      n_new: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Copies of minority rows drawn with replacement. Returns (rows, source row indices into X)."""
    label, deficit = _minority(y)
    n_new = deficit if n_new is None else n_new
    min_idx = np.flatnonzero(np.asarray(y) == label)
    source = min_idx[rng.integers(0, len(min_idx), n_new)]
    return np.asarray(X)[source].copy(), source


def smote(X_minority: np.ndarray, n_new: int, k: int, rng: np.random.Generator) -> Interpolation:
    """Each row lies between a random minority row and one of its k nearest minority neighbours."""
    X_min = np.asarray(X_minority, dtype=np.float64)
    _require_neighbours(len(X_min), k, "SMOTE")
    nn = _neighbours(X_min, X_min, k, self_index=np.arange(len(X_min)))
    return _interpolate(X_min, nn, rng.integers(0, len(X_min), n_new), rng)


def minority_median_std(numeric: np.ndarray) -> float:
    """Median over continuous columns of the per-column standard deviation."""
    numeric = np.asarray(numeric, dtype=np.float64)
    if numeric.shape[1] == 0:
        return 0.0
    return float(np.median(np.std(numeric, axis=0)))


def _nc_squared(a_num, a_codes, b_num, b_codes, med_std: float) -> np.ndarray:
    if a_num.shape[1]:
        dist = cdist(a_num, b_num, "sqeuclidean")
    else:
        dist = np.zeros((len(a_codes), len(b_codes)))
    for j in range(a_codes.shape[1]):
        dist += (med_std ** 2) * (a_codes[:, None, j] != b_codes[None, :, j])
    return dist


def nc_distance_matrix(a_num, a_codes, b_num, b_codes, med_std: float) -> np.ndarray:
    """Euclidean distance over continuous columns plus med_std per differing nominal column (in squares)."""
    a_num, b_num = np.atleast_2d(np.asarray(a_num, float)), np.atleast_2d(np.asarray(b_num, float))
    a_codes, b_codes = np.atleast_2d(np.asarray(a_codes)), np.atleast_2d(np.asarray(b_codes))
    return np.sqrt(_nc_squared(a_num, a_codes, b_num, b_codes, med_std))


def nominal_mode(values: np.ndarray, categories: Optional[Sequence[str]] = None) -> int:
    """Most frequent code; ties go to the lexicographically smallest category (smallest code without names)."""
    codes, counts = np.unique(values, return_counts=True)
    tied = codes[counts == counts.max()]
    if categories is None:
        return int(tied.min())
    return int(min(tied, key=lambda c: str(categories[c])))


def smote_nc(X_numeric: np.ndarray, codes: np.ndarray, n_new: int, k: int, rng: np.random.Generator,
             med_std: Optional[float] = None,
             categories: Optional[Sequence[Sequence[str]]] = None) -> NominalInterpolation:
    """
    SMOTE for mixed data, run on minority rows only.

    Continuous columns interpolate toward a random one of the k nearest neighbours;
    every nominal column takes the mode of those k neighbours.
    """
    X_num = np.asarray(X_numeric, dtype=np.float64)
    codes = np.asarray(codes, dtype=np.int64)
    if codes.ndim != 2 or codes.shape[1] == 0:
        raise OversampleError("SMOTENC is not defined for data without categorical columns")
    m = len(codes)
    _require_neighbours(m, k, "SMOTENC")
    if med_std is None:
        med_std = minority_median_std(X_num)

    dist = _nc_squared(X_num, codes, X_num, codes, med_std)
    nn = _neighbours(X_num, X_num, k, self_index=np.arange(m), sq_dist=dist)
    modes = np.array([
        [nominal_mode(codes[nn[i], j], categories[j] if categories is not None else None)
         for j in range(codes.shape[1])]
        for i in range(m)
    ], dtype=np.int64)

    base = rng.integers(0, m, n_new)
    neighbour = nn[base, rng.integers(0, k, n_new)]
    gap = rng.random(n_new)
    numeric = X_num[base] + gap[:, None] * (X_num[neighbour] - X_num[base])
    return NominalInterpolation(numeric, modes[base].reshape(n_new, codes.shape[1]), base, neighbour, gap)


def borderline_status(shares: np.ndarray) -> np.ndarray:
    """'noise' when every neighbour is majority, 'danger' when at least half are, else 'safe'."""
    shares = np.asarray(shares, dtype=np.float64)
    status = np.full(shares.shape, "safe", dtype=object)
    status[(shares >= 0.5) & (shares < 1.0)] = "danger"
    status[shares >= 1.0] = "noise"
    return status


def borderline_smote(X: np.ndarray, y: np.ndarray, k: int, m: int, rng: np.random.Generator,
                     n_new: Optional[int] = None) -> Interpolation:
    """
    SMOTE seeded only from minority rows in danger: at least half, but not all,
    of their m nearest neighbours (both classes) are majority rows.
    Falls back to plain SMOTE when no row is in danger.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    label, deficit = _minority(y)
    n_new = deficit if n_new is None else n_new
    min_idx = np.flatnonzero(y == label)
    X_min = X[min_idx]
    _require_neighbours(len(X_min), k, "Borderline-SMOTE")
    if len(X) < m + 1:
        raise OversampleError(f"Borderline-SMOTE needs at least m+1={m + 1} rows, got {len(X)}")

    nn_all = _neighbours(X_min, X, m, self_index=min_idx)
    shares = (y[nn_all] != label).mean(axis=1)
    danger = np.flatnonzero(borderline_status(shares) == "danger")
    nn_min = _neighbours(X_min, X_min, k, self_index=np.arange(len(X_min)))

    if danger.size == 0:
        _logger.warning("Borderline-SMOTE: no minority row in danger, falling back to SMOTE")
        base = rng.integers(0, len(X_min), n_new)
    else:
        base = danger[rng.integers(0, danger.size, n_new)]
    return _interpolate(X_min, nn_min, base, rng)


def adasyn_allocation(majority_counts: np.ndarray, n_new: int) -> np.ndarray:
    """
    Split n_new proportionally to the majority-neighbour counts.
    Floors first; the remainder goes one each to the highest counts (lower index on ties).
    """
    counts = np.asarray(majority_counts, dtype=np.int64)
    total = int(counts.sum())
    if total == 0:
        raise OversampleError("ADASYN weights are all zero")
    alloc = (counts * n_new) // total
    residual = int(n_new - alloc.sum())
    order = np.argsort(-counts, kind="stable")
    alloc[order[:residual]] += 1
    return alloc


def adasyn(X: np.ndarray, y: np.ndarray, k: int, rng: np.random.Generator,
           n_new: Optional[int] = None) -> Interpolation:
    """
    SMOTE with the budget spread over minority rows in proportion to the
    number of majority rows among their k nearest neighbours (both classes).
    Falls back to plain SMOTE when no minority row has a majority neighbour.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    label, deficit = _minority(y)
    n_new = deficit if n_new is None else n_new
    min_idx = np.flatnonzero(y == label)
    X_min = X[min_idx]
    _require_neighbours(len(X_min), k, "ADASYN")

    nn_all = _neighbours(X_min, X, k, self_index=min_idx)
    majority_counts = (y[nn_all] != label).sum(axis=1)
    nn_min = _neighbours(X_min, X_min, k, self_index=np.arange(len(X_min)))

    if majority_counts.sum() == 0:
        _logger.warning("ADASYN: no minority row has majority neighbours, falling back to SMOTE")
        base = rng.integers(0, len(X_min), n_new)
    else:
        base = np.repeat(np.arange(len(X_min)), adasyn_allocation(majority_counts, n_new))
    return _interpolate(X_min, nn_min, base, rng)


def oversample(method: OversampleMethod, encoded: EncodedMatrix, seed: int,
               mixed: Optional[MixedMatrix] = None,
               preprocessor: Optional[PreprocessorModel] = None,
               verbose: bool = False) -> OversampleResult:
    """
    Append synthetic minority rows until both classes have the same count.

    Original rows are kept verbatim and first. SMOTENC works on `mixed`
    (scaled numerics plus category codes); every other method works on the
    one-hot encoded matrix.

    Raises:
        OversampleError: single-class input, too few minority rows for k-NN,
            or SMOTENC without categorical columns.
    """
    labels = encoded.labels
    if labels is None:
        raise OversampleError("Training data carries no labels")
    label, deficit = _minority(labels)
    if method.tag == "none" or deficit == 0:
        return OversampleResult(data=encoded, n_synthetic=0)

    rng = np.random.default_rng(seed)
    X = encoded.values
    min_mask = labels == label
    k = method.k_neighbours
    details, gan = {}, None

    if method.tag == "random":
        new, _ = random_oversample(X, labels, rng)
    elif method.tag == "smote":
        new = smote(X[min_mask], deficit, k, rng).rows
    elif method.tag == "b_smote":
        new = borderline_smote(X, labels, k, method.m_neighbours, rng).rows
    elif method.tag == "adasyn":
        new = adasyn(X, labels, k, rng).rows
    elif method.tag == "smote_nc":
        if mixed is None:
            raise OversampleError("SMOTENC needs the mixed (pre one-hot) representation")
        if not encoded.layout.spans:
            raise OversampleError("SMOTENC is not defined for data without categorical columns")
        categories = [span.categories for span in encoded.layout.spans]
        nc = smote_nc(mixed.numeric[min_mask], mixed.codes[min_mask], deficit, k, rng, categories=categories)
        new = encode_mixed(MixedMatrix(numeric=nc.numeric, codes=nc.codes, layout=mixed.layout)).values
    else:
        config = method.gan_config
        if method.grid is not None:
            search = grid_search(encoded, method.grid, config, derive_seed(seed, "grid"))
            config = search.best
            details["grid_scores"] = [
                {"epochs": c.epochs, "gen_layers": list(c.gen_layers),
                 "extra_numeric_layer": c.extra_numeric_layer, "auc_roc": s}
                for c, s in search.scores
            ]
        details["selected"] = {"epochs": config.epochs, "gen_layers": list(config.gen_layers),
                               "extra_numeric_layer": config.extra_numeric_layer}
        gan = train_cwgan(encoded, config, seed, preprocessor=preprocessor, verbose=verbose)
        new = sample_encoded(gan, deficit, derive_seed(seed, "sample"), label=label).values

    _logger.info("%s: appended %d synthetic rows", method.label, len(new))
    data = EncodedMatrix(values=np.vstack([X, new]), layout=encoded.layout,
                         labels=np.concatenate([labels, np.full(len(new), label, dtype=labels.dtype)]))
    return OversampleResult(data=data, n_synthetic=len(new), details=details, gan=gan)
