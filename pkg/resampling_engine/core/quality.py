"""
Generative Quality Module
Responsible for comparing synthetic rows with real rows: dimension-wise
means and standard deviations, dimension-wise prediction performance,
and univariate plot data (density curves and category counts).
"""
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import plotly.graph_objects as go
from plotly.subplots import make_subplots
from scipy.stats import norm
from sklearn.linear_model import Ridge
from sklearn.metrics import f1_score, r2_score
from sklearn.model_selection import train_test_split

from resampling_engine.classifiers import ClassifierSpec
from resampling_engine.core.preprocess import EncodedMatrix
from resampling_engine.errors import PreprocessError

_logger = logging.getLogger(__name__)

KDE_BANDWIDTH = 0.02
KDE_GRID = np.linspace(-0.05, 1.05, 512)
PREDICTION_TEST_SIZE = 0.1
_KDE_CHUNK = 4096


def pearson(a: Sequence[float], b: Sequence[float]) -> Optional[float]:
    """Two-pass Pearson correlation; None when either side has zero variance."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) < 2:
        return None
    da = a - a.mean()
    db = b - b.mean()
    ss_a = float(np.sum(da * da))
    ss_b = float(np.sum(db * db))
    if ss_a == 0.0 or ss_b == 0.0:
        return None
    r = float(np.sum(da * db)) / math.sqrt(ss_a * ss_b)
    return min(1.0, max(-1.0, r))


@dataclass(frozen=True)
class Panel:
    """Paired (real, synthetic) values with their deviation from the identity line."""
    labels: List[str]
    real: np.ndarray
    synth: np.ndarray
    rmse: float
    pearson: Optional[float]

    @classmethod
    def build(cls, labels, real, synth) -> "Panel":
        real = np.asarray(real, dtype=np.float64)
        synth = np.asarray(synth, dtype=np.float64)
        rmse = float(np.sqrt(np.mean((synth - real) ** 2))) if len(real) else 0.0
        return cls(list(labels), real, synth, rmse, pearson(real, synth))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"dimension": self.labels, "real": self.real, "synthetic": self.synth})


@dataclass
class DimwiseReport:
    means: Panel
    stds: Panel
    prediction: Optional[Panel] = None
    notes: List[str] = field(default_factory=list)


def _check_layouts(real: EncodedMatrix, synth: EncodedMatrix):
    if real.layout != synth.layout:
        raise PreprocessError("Real and synthetic matrices have different layouts")


def dimwise_stats(real: EncodedMatrix, synth: EncodedMatrix) -> DimwiseReport:
    """Per encoded column mean and (population) standard deviation, real against synthetic."""
    _check_layouts(real, synth)
    labels = real.layout.column_names()
    means = Panel.build(labels, real.values.mean(axis=0), synth.values.mean(axis=0))
    stds = Panel.build(labels, real.values.std(axis=0), synth.values.std(axis=0))
    notes = []
    for name, panel in (("means", means), ("stds", stds)):
        if panel.pearson is None:
            notes.append(f"Pearson r undefined for the {name} panel (zero variance)")
    return DimwiseReport(means=means, stds=stds, notes=notes)


def _score_variable(values: np.ndarray, target, covariates, kind: str, train_idx, test_idx, seed: int):
    X = values[:, covariates]
    if kind == "numerical":
        y = values[:, target]
        model = Ridge(alpha=1.0)
        model.fit(X[train_idx], y[train_idx])
        return float(r2_score(y[test_idx], model.predict(X[test_idx])))

    y = values[:, target].argmax(axis=1)
    if len(np.unique(y[train_idx])) < 2:
        return None
    model = ClassifierSpec(algo="random_forest").build(seed)
    model.fit(X[train_idx], y[train_idx])
    return float(f1_score(y[test_idx], model.predict(X[test_idx]), average="weighted"))


def dimwise_prediction(real: EncodedMatrix, synth: EncodedMatrix, seed: int) -> DimwiseReport:
    """
    Predict every variable from all the others, once within the real data and once
    within the synthetic data, and pair the scores.

    Numerical targets use ridge regression scored by R²; categorical targets use their
    whole one-hot span as a single target with the benchmark random forest scored by
    weighted f1. Each dataset is split 90/10 with the same seed. The class label is
    neither a target nor a covariate.
    """
    _check_layouts(real, synth)
    layout = real.layout
    if layout.width < 2:
        raise PreprocessError("Dimension-wise prediction needs at least two encoded columns")

    # 1. Variables: numeric columns, then one group per one-hot span
    variables = [(name, "numerical", [j]) for j, name in enumerate(layout.numeric_columns)]
    variables += [(span.name, "categorical", list(range(span.start, span.stop))) for span in layout.spans]

    # 2. Splits
    splits = {}
    for key, matrix in (("real", real), ("synth", synth)):
        if matrix.n_rows < 10:
            raise PreprocessError(f"Dimension-wise prediction needs at least 10 {key} rows")
        rows = np.arange(matrix.n_rows)
        splits[key] = train_test_split(rows, test_size=PREDICTION_TEST_SIZE, random_state=seed, shuffle=True)

    # 3. Score each variable on both datasets
    labels, real_scores, synth_scores, notes = [], [], [], []
    for name, kind, columns in variables:
        covariates = [j for j in range(layout.width) if j not in columns]
        target = columns[0] if kind == "numerical" else columns
        pair = []
        for key, matrix in (("real", real), ("synth", synth)):
            train_idx, test_idx = splits[key]
            pair.append(_score_variable(matrix.values, target, covariates, kind, train_idx, test_idx, seed))
        if any(s is None for s in pair):
            note = f"Variable '{name}' skipped: a single category in a training split"
            _logger.warning(note)
            notes.append(note)
            continue
        labels.append(name)
        real_scores.append(pair[0])
        synth_scores.append(pair[1])

    panel = Panel.build(labels, real_scores, synth_scores)
    report = dimwise_stats(real, synth)
    report.prediction = panel
    report.notes.extend(notes)
    return report


def _kde(sample: np.ndarray) -> np.ndarray:
    density = np.zeros_like(KDE_GRID)
    if len(sample) == 0:
        return density
    for start in range(0, len(sample), _KDE_CHUNK):
        chunk = sample[start:start + _KDE_CHUNK]
        density += norm.pdf(KDE_GRID[None, :], loc=chunk[:, None], scale=KDE_BANDWIDTH).sum(axis=0)
    return density / len(sample)


def univariate_summaries(real: EncodedMatrix, synth: EncodedMatrix) -> Dict[str, object]:
    """
    Plot data per variable.

    Returns:
        dict with "kde" (column, x, real, synthetic) for numerical columns,
        "counts" (column, category, real, synthetic) for categorical columns in
        descending real frequency, and "log_scale" set for the count plots.
    """
    _check_layouts(real, synth)
    layout = real.layout

    kde_frames = []
    for j, name in enumerate(layout.numeric_columns):
        kde_frames.append(pd.DataFrame({
            "column": name,
            "x": KDE_GRID,
            "real": _kde(real.values[:, j]),
            "synthetic": _kde(synth.values[:, j]),
        }))

    count_frames = []
    for span in layout.spans:
        real_counts = real.values[:, span.slice].sum(axis=0)
        synth_counts = synth.values[:, span.slice].sum(axis=0)
        order = np.argsort(-real_counts, kind="stable")
        count_frames.append(pd.DataFrame({
            "column": span.name,
            "category": [span.categories[i] for i in order],
            "real": real_counts[order].astype(np.int64),
            "synthetic": synth_counts[order].astype(np.int64),
        }))

    kde = pd.concat(kde_frames, ignore_index=True) if kde_frames else \
        pd.DataFrame(columns=["column", "x", "real", "synthetic"])
    counts = pd.concat(count_frames, ignore_index=True) if count_frames else \
        pd.DataFrame(columns=["column", "category", "real", "synthetic"])
    return {"kde": kde, "counts": counts, "log_scale": True}


def generate_quality_report(report: DimwiseReport) -> dict:
    """
    Summarise a dimension-wise report into a grade and a readable summary.
    """
    means, stds = report.means, report.stds
    reason = []
    score = "high"

    # 1. Moments
    if means.rmse >= 0.1 or stds.rmse >= 0.2:
        score = "low"
        reason.append(f"Large moment mismatch (mean RMSE {means.rmse:.4f}, std RMSE {stds.rmse:.4f})")
    elif means.rmse >= 0.05 or stds.rmse >= 0.1:
        score = "medium"
        reason.append(f"Moderate moment mismatch (mean RMSE {means.rmse:.4f}, std RMSE {stds.rmse:.4f})")

    # 2. Dependencies between variables
    prediction = report.prediction
    if prediction is not None and prediction.rmse >= 0.1:
        if score == "high":
            score = "medium"
        reason.append(f"Prediction scores deviate (RMSE {prediction.rmse:.4f})")

    summary_parts = [
        f"Dimension-wise means deviate from the real data with RMSE {means.rmse:.4f}"
        + (f" (r = {means.pearson:.3f})." if means.pearson is not None else "."),
        f"Standard deviations deviate with RMSE {stds.rmse:.4f}.",
    ]
    if prediction is not None:
        summary_parts.append(
            f"Prediction performance over {len(prediction.labels)} variable(s) deviates with RMSE {prediction.rmse:.4f}."
        )
    else:
        summary_parts.append("Dimension-wise prediction was not computed.")
    if score == "high":
        summary_parts.append("The synthetic rows reproduce the marginal structure of the real data closely.")
    elif score == "medium":
        summary_parts.append("The synthetic rows are usable, but some dimensions drift from the real data.")
    else:
        summary_parts.append("The synthetic rows differ substantially from the real data.")

    return {
        "score": score,
        "reason": "; ".join(reason),
        "mean_rmse": means.rmse,
        "mean_pearson": means.pearson,
        "std_rmse": stds.rmse,
        "std_pearson": stds.pearson,
        "prediction_rmse": prediction.rmse if prediction is not None else None,
        "prediction_pearson": prediction.pearson if prediction is not None else None,
        "notes": list(report.notes),
        "summary": " ".join(summary_parts),
    }


def _panel_figure(report: DimwiseReport) -> go.Figure:
    panels = [("Means", report.means), ("Standard deviations", report.stds)]
    if report.prediction is not None:
        panels.append(("Prediction", report.prediction))
    fig = make_subplots(rows=1, cols=len(panels), subplot_titles=[t for t, _ in panels])
    for i, (title, panel) in enumerate(panels, start=1):
        fig.add_trace(go.Scatter(x=panel.real, y=panel.synth, mode="markers", text=panel.labels,
                                 name=f"{title} (RMSE {panel.rmse:.4f})"), row=1, col=i)
        lo = float(min(panel.real.min(initial=0.0), panel.synth.min(initial=0.0)))
        hi = float(max(panel.real.max(initial=1.0), panel.synth.max(initial=1.0)))
        fig.add_trace(go.Scatter(x=[lo, hi], y=[lo, hi], mode="lines", line={"dash": "dash"},
                                 showlegend=False), row=1, col=i)
        fig.update_xaxes(title_text="real", row=1, col=i)
        fig.update_yaxes(title_text="synthetic", row=1, col=i)
    return fig


def _univariate_figures(summaries: Dict[str, object]) -> List[go.Figure]:
    figures = []
    kde, counts = summaries["kde"], summaries["counts"]
    for name, frame in kde.groupby("column", sort=False):
        fig = go.Figure()
        fig.add_trace(go.Scatter(x=frame["x"], y=frame["real"], name="real"))
        fig.add_trace(go.Scatter(x=frame["x"], y=frame["synthetic"], name="synthetic"))
        fig.update_layout(title=f"{name} (density)")
        figures.append(fig)
    for name, frame in counts.groupby("column", sort=False):
        fig = go.Figure()
        fig.add_trace(go.Bar(x=frame["category"], y=frame["real"], name="real"))
        fig.add_trace(go.Bar(x=frame["category"], y=frame["synthetic"], name="synthetic"))
        fig.update_layout(title=f"{name} (counts)", barmode="group")
        if summaries.get("log_scale"):
            fig.update_yaxes(type="log")
        figures.append(fig)
    return figures


def write_quality_files(report: DimwiseReport, summaries: Dict[str, object], out_dir) -> Dict[str, Path]:
    """Write panel CSVs, univariate plot data, the summary JSON and an HTML render."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}

    # 1. Tabular plot data
    written["means"] = out_dir / "dimwise_means.csv"
    report.means.to_frame().to_csv(written["means"], index=False)
    written["stds"] = out_dir / "dimwise_stds.csv"
    report.stds.to_frame().to_csv(written["stds"], index=False)
    if report.prediction is not None:
        written["prediction"] = out_dir / "dimwise_prediction.csv"
        report.prediction.to_frame().to_csv(written["prediction"], index=False)
    written["kde"] = out_dir / "univariate_kde.csv"
    summaries["kde"].to_csv(written["kde"], index=False)
    written["counts"] = out_dir / "univariate_counts.csv"
    summaries["counts"].to_csv(written["counts"], index=False)

    # 2. Summary
    written["summary"] = out_dir / "quality.json"
    written["summary"].write_text(json.dumps(generate_quality_report(report), indent=2))

    # 3. HTML render
    written["html"] = out_dir / "quality.html"
    figures = [_panel_figure(report)] + _univariate_figures(summaries)
    parts = [fig.to_html(full_html=False, include_plotlyjs="cdn" if i == 0 else False)
             for i, fig in enumerate(figures)]
    written["html"].write_text("<html><body>\n" + "\n".join(parts) + "\n</body></html>")
    _logger.info("Quality report written to %s", out_dir)
    return written
