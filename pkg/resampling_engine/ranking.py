"""
Ranking Module
Responsible for ranking oversampling methods per dataset, aggregating mean
ranks, and the Friedman test with the Iman-Davenport correction.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.stats import f as f_dist
from scipy.stats import rankdata

from resampling_engine.metrics import HIGHER_IS_BETTER

_logger = logging.getLogger(__name__)

TiePolicy = Literal["competition", "average", "max", "dense"]
_RANKDATA_METHOD = {"competition": "min", "average": "average", "max": "max", "dense": "dense"}

# methods that inherit another method's result on datasets without categorical columns
SUBSTITUTIONS = {"smote_nc": "smote"}


def rank_methods(scores: Sequence[float], higher_is_better: bool = True,
                 policy: TiePolicy = "competition") -> np.ndarray:
    """
    Rank k scores, 1 = best.

    "competition" shares the lowest rank among ties and skips ("1224");
    "average" shares the mean rank ("1 2.5 2.5 4").
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 1 or len(s) < 2:
        raise ValueError("Ranking needs at least two scores")
    if np.isnan(s).any():
        raise ValueError("Cannot rank missing scores")
    key = -s if higher_is_better else s
    return rankdata(key, method=_RANKDATA_METHOD[policy])


@dataclass
class RankMatrix:
    """Datasets × methods ranks for one (classifier, metric) pair."""
    ranks: np.ndarray
    datasets: List[str]
    methods: List[str]
    higher_is_better: bool
    policy: str
    gaps: List[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.ranks.shape[0]

    @property
    def k(self) -> int:
        return self.ranks.shape[1]

    @property
    def mean_ranks(self) -> np.ndarray:
        return self.ranks.mean(axis=0)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.ranks, index=self.datasets, columns=self.methods)


def rank_table(scores: pd.DataFrame, higher_is_better: bool = True, policy: TiePolicy = "competition",
               substitutions: Optional[Mapping[str, str]] = None) -> RankMatrix:
    """
    Rank every row of a datasets × methods score table.

    A method in `substitutions` that has no score on a dataset takes the result of
    its stand-in: under average ranking it takes the stand-in's score before ranking
    (so rows keep summing to k(k+1)/2), otherwise it copies the stand-in's rank.
    Rows that still miss a method are left out and listed in `gaps`.
    """
    substitutions = SUBSTITUTIONS if substitutions is None else substitutions
    methods = list(scores.columns)
    rows, datasets, gaps = [], [], []
    for dataset, row in scores.iterrows():
        values = row.to_numpy(dtype=np.float64).copy()
        copy_rank = {}
        for j, method in enumerate(methods):
            stand_in = substitutions.get(method)
            if np.isnan(values[j]) and stand_in in methods:
                s = methods.index(stand_in)
                if policy == "average":
                    values[j] = values[s]
                else:
                    copy_rank[j] = s

        present = [j for j in range(len(methods)) if j not in copy_rank]
        if np.isnan(values[present]).any():
            missing = [methods[j] for j in present if np.isnan(values[j])]
            gaps.append(f"{dataset}: missing {', '.join(missing)}")
            continue

        ranks = np.empty(len(methods))
        ranks[present] = rank_methods(values[present], higher_is_better, policy)
        for j, s in copy_rank.items():
            ranks[j] = ranks[s]
        rows.append(ranks)
        datasets.append(str(dataset))

    matrix = np.vstack(rows) if rows else np.zeros((0, len(methods)))
    return RankMatrix(ranks=matrix, datasets=datasets, methods=methods,
                      higher_is_better=higher_is_better, policy=policy, gaps=gaps)


@dataclass(frozen=True)
class FriedmanResult:
    chi2: float
    f: float
    p: float
    dof: Tuple[int, int]
    n: int
    k: int
    divergent: bool = False


def friedman_iman_davenport(ranks, tie_correction: bool = False) -> FriedmanResult:
    """
    Friedman chi² on the mean ranks and its Iman-Davenport F form.

    chi² = 12n / (k(k+1)) * sum(mean_rank²) - 3n(k+1)
    F    = (n-1) chi² / (n(k-1) - chi²), referred to F(k-1, (k-1)(n-1)).

    When every dataset orders the methods identically the denominator vanishes;
    F is then +inf, p is 0 and the result is flagged as divergent.

    Args:
        ranks: RankMatrix or n × k array of within-row ranks.
        tie_correction: Divide chi² by 1 - sum(t³ - t) / (n(k³ - k)) over tie groups.
    """
    R = ranks.ranks if isinstance(ranks, RankMatrix) else np.asarray(ranks, dtype=np.float64)
    if R.ndim != 2:
        raise ValueError("ranks must be a 2-D matrix")
    n, k = R.shape
    if n < 2 or k < 2:
        raise ValueError(f"Friedman test needs n >= 2 datasets and k >= 2 methods, got n={n}, k={k}")

    mean_ranks = R.mean(axis=0)
    chi2 = 12.0 * n / (k * (k + 1)) * float(np.sum(mean_ranks ** 2)) - 3.0 * n * (k + 1)

    if tie_correction:
        ties = 0.0
        for row in R:
            _, counts = np.unique(row, return_counts=True)
            ties += float(np.sum(counts ** 3 - counts))
        denom = 1.0 - ties / (n * (k ** 3 - k))
        chi2 = chi2 / denom if denom > 0 else 0.0

    if abs(chi2) < 1e-12:
        chi2 = 0.0
    dof = (k - 1, (k - 1) * (n - 1))

    denominator = n * (k - 1) - chi2
    if denominator <= 1e-12 * n * (k - 1):
        _logger.warning("Friedman: methods ordered identically on every dataset, F diverges")
        return FriedmanResult(chi2=chi2, f=math.inf, p=0.0, dof=dof, n=n, k=k, divergent=True)

    f_stat = (n - 1) * chi2 / denominator
    p = float(f_dist.sf(f_stat, dof[0], dof[1]))
    return FriedmanResult(chi2=chi2, f=f_stat, p=p, dof=dof, n=n, k=k)


# ============== AGGREGATION ==============

def _usable(records: pd.DataFrame) -> pd.DataFrame:
    frame = records
    if "flagged" in frame.columns:
        frame = frame[~frame["flagged"].astype(bool)]
    return frame[np.isfinite(frame["value"].astype(float))]


def score_tables(records: pd.DataFrame) -> pd.DataFrame:
    """Mean and std over seeds per (dataset, classifier, metric, method)."""
    grouped = _usable(records).groupby(["dataset", "classifier", "metric", "method"], sort=False)["value"]
    table = grouped.agg(mean="mean", std=lambda v: float(np.std(v, ddof=1)) if len(v) > 1 else 0.0,
                        runs="count")
    return table.reset_index()


def _score_matrix(scores: pd.DataFrame, classifier: str, metric: str, methods: List[str]) -> pd.DataFrame:
    subset = scores[(scores["classifier"] == classifier) & (scores["metric"] == metric)]
    pivot = subset.pivot(index="dataset", columns="method", values="mean")
    return pivot.reindex(columns=methods)


def rank_matrices(records: pd.DataFrame, policy: TiePolicy = "competition",
                  methods: Optional[List[str]] = None) -> Dict[Tuple[str, str], RankMatrix]:
    """One RankMatrix per (classifier, metric), methods in first-seen (or given) order."""
    scores = score_tables(records)
    methods = methods or list(dict.fromkeys(records["method"]))
    matrices = {}
    for (classifier, metric), _ in scores.groupby(["classifier", "metric"], sort=False):
        table = _score_matrix(scores, classifier, metric, methods)
        matrices[(classifier, metric)] = rank_table(table, HIGHER_IS_BETTER[metric], policy)
    return matrices


def aggregate_tables(records: pd.DataFrame, policy: TiePolicy = "competition",
                     methods: Optional[List[str]] = None) -> Dict[str, pd.DataFrame]:
    """
    Mean-rank tables from metric records.

    Returns:
        dict with
        "ranks": long table (dataset, classifier, metric, method, rank);
        "dataset_classifier": mean over metrics, rows (dataset, classifier);
        "dataset": mean over classifiers and metrics, rows dataset;
        "classifier_metric": mean over datasets, rows (classifier, metric);
        "overall": mean rank and rank of mean ranks per method, sorted best first;
        "gaps": (classifier, metric, detail) for every row left out.
    """
    columns = ["dataset", "classifier", "metric", "method", "rank"]
    if records.empty:
        empty = pd.DataFrame(columns=columns)
        return {"ranks": empty, "dataset_classifier": pd.DataFrame(), "dataset": pd.DataFrame(),
                "classifier_metric": pd.DataFrame(), "overall": pd.DataFrame(columns=["mean_rank", "rank"]),
                "gaps": pd.DataFrame(columns=["classifier", "metric", "detail"])}

    methods = methods or list(dict.fromkeys(records["method"]))
    long_rows, gaps = [], []
    for (classifier, metric), matrix in rank_matrices(records, policy, methods).items():
        for i, dataset in enumerate(matrix.datasets):
            for j, method in enumerate(matrix.methods):
                long_rows.append((dataset, classifier, metric, method, float(matrix.ranks[i, j])))
        gaps.extend((classifier, metric, gap) for gap in matrix.gaps)

    ranks = pd.DataFrame(long_rows, columns=columns)

    def _mean_by(keys):
        table = ranks.pivot_table(index=keys, columns="method", values="rank", aggfunc="mean", sort=False)
        return table.reindex(columns=methods)

    overall = ranks.groupby("method", sort=False)["rank"].mean().reindex(methods).to_frame("mean_rank")
    overall["rank"] = overall["mean_rank"].rank(method="min")
    overall = overall.sort_values("mean_rank", kind="stable")

    return {
        "ranks": ranks,
        "dataset_classifier": _mean_by(["dataset", "classifier"]),
        "dataset": _mean_by(["dataset"]),
        "classifier_metric": _mean_by(["classifier", "metric"]),
        "overall": overall,
        "gaps": pd.DataFrame(gaps, columns=["classifier", "metric", "detail"]),
    }


def friedman_table(records: pd.DataFrame, policy: TiePolicy = "average",
                   tie_correction: bool = False) -> pd.DataFrame:
    """One Friedman/Iman-Davenport row per (classifier, metric)."""
    rows = []
    for (classifier, metric), matrix in rank_matrices(records, policy).items():
        if matrix.n < 2 or matrix.k < 2:
            rows.append({"classifier": classifier, "metric": metric, "n": matrix.n, "k": matrix.k,
                         "chi2": np.nan, "F": np.nan, "p": np.nan, "divergent": False})
            continue
        result = friedman_iman_davenport(matrix, tie_correction=tie_correction)
        rows.append({"classifier": classifier, "metric": metric, "n": result.n, "k": result.k,
                     "chi2": result.chi2, "F": result.f, "p": result.p, "divergent": result.divergent})
    return pd.DataFrame(rows, columns=["classifier", "metric", "n", "k", "chi2", "F", "p", "divergent"])


# ============== COUNTERFACTUAL RANKS ==============

def _replace_method(records: pd.DataFrame, original: str, variant: str) -> pd.DataFrame:
    kept = records[(records["method"] != original) & (records["method"] != variant)]
    swapped = records[records["method"] == variant].copy()
    swapped["method"] = original
    return pd.concat([kept, swapped], ignore_index=True)


def counterfactual_summary(records: pd.DataFrame, original: str, variants: Mapping[str, str],
                           policy: TiePolicy = "competition") -> pd.DataFrame:
    """
    Re-rank with the results of `original` replaced by each variant's results.

    Rows: the number of (classifier, metric) combinations where the variant ranks
    worse than the original, the counterfactual mean rank, and the counterfactual
    rank of mean ranks. Columns are (variant, dataset); every row is computed
    within one dataset.
    """
    baseline = records[~records["method"].isin(list(variants.values()))]
    methods = list(dict.fromkeys(baseline["method"]))
    base_ranks = aggregate_tables(baseline, policy, methods)["ranks"]
    datasets = list(dict.fromkeys(baseline["dataset"]))

    def _own_ranks(ranks: pd.DataFrame, dataset: str) -> pd.Series:
        mine = ranks[(ranks["method"] == original) & (ranks["dataset"] == dataset)]
        return mine.set_index(["classifier", "metric"])["rank"]

    columns = {}
    for name, variant in variants.items():
        swapped = _replace_method(records[records["method"].isin(methods + [variant])], original, variant)
        tables = aggregate_tables(swapped, policy, methods)
        by_dataset = tables["dataset"]
        for dataset in datasets:
            if dataset not in by_dataset.index:
                continue
            before, after = _own_ranks(base_ranks, dataset), _own_ranks(tables["ranks"], dataset)
            common = after.index.intersection(before.index)
            worse = int((after.loc[common] > before.loc[common]).sum())
            mean_ranks = by_dataset.loc[dataset].dropna()
            columns[(name, dataset)] = [
                f"{worse}/{len(common)}",
                f"{mean_ranks[original]:.2f}",
                f"{int(mean_ranks.rank(method='min')[original])}",
            ]

    index = [
        "Classifier-metric combinations where ablation performs worse",
        "Counterfactual mean rank",
        "Counterfactual rank of mean ranks",
    ]
    if not columns:
        return pd.DataFrame(index=index, columns=pd.MultiIndex.from_tuples([], names=["variant", "dataset"]))
    summary = pd.DataFrame(columns, index=index)
    summary.columns.names = ["variant", "dataset"]
    return summary
