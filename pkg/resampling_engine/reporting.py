"""
Reporting Module
Responsible for turning a results store into rank tables, mean-rank summaries,
Friedman tests, raw score tables and a rendered Markdown report.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import markdown2
import numpy as np
import pandas as pd

import results_store
from resampling_engine import ranking

_logger = logging.getLogger(__name__)


@dataclass
class ReportBundle:
    out_dir: Path
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    files: List[Path] = field(default_factory=list)
    n_records: int = 0


def manual_to_markdown(d: pd.DataFrame, index: bool = True) -> str:
    """Render a table as a Markdown pipe table. Multi-level headers are joined with " / "."""
    if d.empty:
        return "_(empty)_"
    if isinstance(d.columns, pd.MultiIndex):
        d = d.copy()
        d.columns = [" / ".join(str(part) for part in col) for col in d.columns]
    if index:
        d = d.reset_index()
    cols = d.columns.tolist()
    res = ["| " + " | ".join(str(c) for c in cols) + " |"]
    res.append("| " + " | ".join(["---"] * len(cols)) + " |")
    for _, row in d.iterrows():
        res.append("| " + " | ".join(_cell(val) for val in row) + " |")
    return "\n".join(res)


def _cell(value) -> str:
    if isinstance(value, float):
        return "" if np.isnan(value) else f"{value:.2f}"
    return str(value).replace("\n", " ")


def render_markdown(content: str) -> str:
    """Convert Markdown to HTML."""
    return markdown2.markdown(content, extras=["fenced-code-blocks", "tables"])


def format_score(mean: float, std: float) -> str:
    """Mean with the std over seeds in brackets, e.g. 0.7605 (0.0355)."""
    return f"{mean:.4f} ({std:.4f})"


def _filter(records: pd.DataFrame, filters: Dict[str, Optional[Sequence[str]]]) -> pd.DataFrame:
    for column, allowed in filters.items():
        if allowed:
            records = records[records[column].astype(str).isin([str(a) for a in allowed])]
    return records


def raw_score_tables(records: pd.DataFrame, methods: List[str]) -> Dict[str, pd.DataFrame]:
    """Per (classifier, metric) a datasets × methods table of 'mean (std)' strings."""
    scores = ranking.score_tables(records)
    scores["formatted"] = [format_score(m, s) for m, s in zip(scores["mean"], scores["std"])]
    tables = {}
    for (classifier, metric), subset in scores.groupby(["classifier", "metric"], sort=False):
        table = subset.pivot(index="dataset", columns="method", values="formatted")
        tables[f"{classifier}/{metric}"] = table.reindex(columns=methods).fillna("")
    return tables


def collect_quality(results_dir: Path) -> pd.DataFrame:
    """Gen-quality summaries written by cWGAN cells, one row per cell."""
    rows = []
    base = Path(results_dir) / results_store.QUALITY_DIR
    for path in sorted(base.glob("*/seed_*/*/quality.json")):
        method_dir = path.parent
        summary = json.loads(path.read_text())
        rows.append({
            "dataset": method_dir.parent.parent.name,
            "seed": int(method_dir.parent.name.removeprefix("seed_")),
            "method": method_dir.name,
            "score": summary.get("score"),
            "mean_rmse": summary.get("mean_rmse"),
            "std_rmse": summary.get("std_rmse"),
            "prediction_rmse": summary.get("prediction_rmse"),
            "path": str(method_dir),
        })
    return pd.DataFrame(rows, columns=["dataset", "seed", "method", "score", "mean_rmse",
                                       "std_rmse", "prediction_rmse", "path"])


def report(results_dir, out_dir=None, datasets=None, methods=None, classifiers=None, metrics=None,
           policy: str = "competition", tie_correction: bool = False,
           extra_sections: Optional[Dict[str, pd.DataFrame]] = None) -> ReportBundle:
    """
    Build the report bundle of a results store.

    Display ranks use `policy` (competition by default); the Friedman statistic
    always uses average ranks. An empty selection still writes a (short) report.

    Args:
        results_dir: Results store written by run_benchmark.
        out_dir: Where to write the bundle (default: <results_dir>/report).
        datasets, methods, classifiers, metrics: Optional filters.
        extra_sections: Titled tables appended to the Markdown report.
    """
    results_dir = Path(results_dir)
    out_dir = Path(out_dir) if out_dir else results_dir / "report"
    out_dir.mkdir(parents=True, exist_ok=True)
    bundle = ReportBundle(out_dir=out_dir)

    # 1. Records
    records = results_store.records_frame(results_dir)
    records = _filter(records, {"dataset": datasets, "method": methods,
                                "classifier": classifiers, "metric": metrics})
    bundle.n_records = len(records)
    config = results_store.read_config(results_dir)
    lines = ["# Benchmark report", ""]
    if config:
        lines += [f"Config hash: `{config.get('config_hash', '')}`", ""]

    if records.empty:
        _logger.warning("No records selected in %s", results_dir)
        lines += ["No records match the selection."]
        _write_report(bundle, lines)
        return bundle

    method_order = methods or list(dict.fromkeys(records["method"]))
    method_order = [m for m in method_order if m in set(records["method"])]

    # 2. Tables
    tables = ranking.aggregate_tables(records, policy=policy, methods=method_order)
    bundle.tables.update({
        "ranks": tables["ranks"],
        "mean_ranks_dataset_classifier": tables["dataset_classifier"],
        "mean_ranks_dataset": tables["dataset"],
        "mean_ranks_classifier_metric": tables["classifier_metric"],
        "overall": tables["overall"],
        "gaps": tables["gaps"],
        "scores": ranking.score_tables(records),
        "friedman": ranking.friedman_table(records, policy="average", tie_correction=tie_correction),
        "quality": collect_quality(results_dir),
        "failures": pd.DataFrame(results_store.read_failures(results_dir)),
    })
    raw = raw_score_tables(records, method_order)

    # 3. Files
    for name, table in bundle.tables.items():
        path = out_dir / f"{name}.csv"
        keep_index = name.startswith("mean_ranks") or name == "overall"
        table.to_csv(path, index=keep_index)
        bundle.files.append(path)
    for key, table in raw.items():
        path = out_dir / f"raw_{key.replace('/', '_')}.csv"
        table.to_csv(path)
        bundle.files.append(path)

    summary_path = out_dir / "summary.json"
    summary = {
        "config_hash": config.get("config_hash"),
        "n_records": bundle.n_records,
        "overall": bundle.tables["overall"].reset_index().to_dict(orient="records"),
        "friedman": bundle.tables["friedman"].to_dict(orient="records"),
    }
    summary_path.write_text(json.dumps(summary, indent=2, default=str))
    bundle.files.append(summary_path)

    # 4. Markdown
    lines += [f"Records: {bundle.n_records}", "", "## Overall mean rank", "",
              manual_to_markdown(bundle.tables["overall"]), "",
              "## Mean rank per dataset and classifier", "",
              manual_to_markdown(bundle.tables["mean_ranks_dataset_classifier"]), "",
              "## Mean rank per classifier and metric", "",
              manual_to_markdown(bundle.tables["mean_ranks_classifier_metric"]), "",
              "## Friedman test (Iman-Davenport)", "",
              manual_to_markdown(_friedman_display(bundle.tables["friedman"]), index=False), ""]
    lines += ["## Scores (mean over seeds, std in brackets)", ""]
    for key, table in raw.items():
        lines += [f"### {key}", "", manual_to_markdown(table), ""]
    if not bundle.tables["gaps"].empty:
        lines += ["## Gaps", "", manual_to_markdown(bundle.tables["gaps"], index=False), ""]
    if not bundle.tables["quality"].empty:
        lines += ["## Generative quality", "",
                  manual_to_markdown(bundle.tables["quality"].drop(columns=["path"]), index=False), ""]
    for title, table in (extra_sections or {}).items():
        bundle.tables[title] = table
        lines += [f"## {title}", "", manual_to_markdown(table), ""]

    _write_report(bundle, lines)
    _logger.info("Report with %d records written to %s", bundle.n_records, out_dir)
    return bundle


def _friedman_display(table: pd.DataFrame) -> pd.DataFrame:
    shown = table.copy()
    shown["F"] = ["inf" if np.isinf(f) else f"{f:.4f}" for f in shown["F"]]
    shown["p"] = [f"{p:.4f}" for p in shown["p"]]
    return shown


def _write_report(bundle: ReportBundle, lines: List[str]):
    text = "\n".join(lines) + "\n"
    md_path = bundle.out_dir / "report.md"
    md_path.write_text(text)
    html_path = bundle.out_dir / "report.html"
    html_path.write_text(render_markdown(text))
    bundle.files += [md_path, html_path]
