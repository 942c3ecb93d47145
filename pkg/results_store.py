"""
Results store module: append-only JSON-lines files under one results directory.

Layout:
    config.json       validated benchmark config and its hash
    metrics.jsonl     one MetricRecord per line (deterministic fields only)
    runs.jsonl        one RunRecord per (dataset, seed, method) cell, with wall-clock
    failures.jsonl    one entry per failed cell
    quality/          gen-quality files per cWGAN cell
"""
import json
import logging
from pathlib import Path
from typing import Iterable, List

import pandas as pd

import settings

_logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.jsonl"
RUNS_FILE = "runs.jsonl"
FAILURES_FILE = "failures.jsonl"
CONFIG_FILE = "config.json"
QUALITY_DIR = "quality"

RECORD_COLUMNS = ["dataset", "seed", "method", "classifier", "metric", "value", "bootstrap", "flagged"]


def get_store(results_dir=None) -> Path:
    """Get (and create) the results directory."""
    path = Path(results_dir or settings.RESULTS_DIR)
    path.mkdir(parents=True, exist_ok=True)
    return path


def reset_store(results_dir) -> Path:
    """Truncate the record files so a run starts from an empty store."""
    path = get_store(results_dir)
    for name in (METRICS_FILE, RUNS_FILE, FAILURES_FILE):
        (path / name).write_text("")
    return path


def _append_lines(path: Path, rows: Iterable[dict]) -> int:
    count = 0
    with open(path, "a", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, sort_keys=True) + "\n")
            count += 1
        handle.flush()
    return count


def _read_lines(path: Path) -> List[dict]:
    """Complete lines only; a torn last line (no trailing newline) is skipped."""
    if not path.exists():
        return []
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    complete, tail = lines[:-1], lines[-1]
    if tail.strip():
        _logger.warning("%s: ignoring incomplete last line", path)
    rows = []
    for number, line in enumerate(complete, start=1):
        if not line.strip():
            continue
        try:
            rows.append(json.loads(line))
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}:{number}: corrupt record: {e}") from e
    return rows


# ============== CONFIG OPERATIONS ==============

def write_config(results_dir, config: dict, config_hash: str) -> Path:
    path = get_store(results_dir) / CONFIG_FILE
    path.write_text(json.dumps({"config_hash": config_hash, "config": config}, indent=2, sort_keys=True))
    return path


def read_config(results_dir) -> dict:
    path = Path(results_dir) / CONFIG_FILE
    if not path.exists():
        return {}
    return json.loads(path.read_text())


# ============== METRIC OPERATIONS ==============

def append_records(results_dir, records) -> int:
    """Append MetricRecords (pydantic models or dicts)."""
    rows = (r.model_dump() if hasattr(r, "model_dump") else dict(r) for r in records)
    return _append_lines(get_store(results_dir) / METRICS_FILE, rows)


def read_records(results_dir) -> List[dict]:
    return _read_lines(Path(results_dir) / METRICS_FILE)


def records_frame(results_dir) -> pd.DataFrame:
    """All metric records as a frame (empty frame with the record columns when none)."""
    rows = read_records(results_dir)
    if not rows:
        return pd.DataFrame(columns=RECORD_COLUMNS)
    return pd.DataFrame(rows, columns=RECORD_COLUMNS)


# ============== RUN OPERATIONS ==============

def append_runs(results_dir, runs) -> int:
    rows = (r.model_dump(mode="json") if hasattr(r, "model_dump") else dict(r) for r in runs)
    return _append_lines(get_store(results_dir) / RUNS_FILE, rows)


def read_runs(results_dir) -> List[dict]:
    return _read_lines(Path(results_dir) / RUNS_FILE)


# ============== FAILURE OPERATIONS ==============

def append_failures(results_dir, failures: Iterable[dict]) -> int:
    return _append_lines(get_store(results_dir) / FAILURES_FILE, failures)


def read_failures(results_dir) -> List[dict]:
    return _read_lines(Path(results_dir) / FAILURES_FILE)


def quality_dir(results_dir, dataset: str, seed: int, method: str) -> Path:
    return Path(results_dir) / QUALITY_DIR / dataset / f"seed_{seed}" / method
