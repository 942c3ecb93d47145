"""
Ablation Module
Responsible for re-running the cWGAN with components switched off and
re-ranking with its results replaced by each variant's results.
"""
import logging
from pathlib import Path
from typing import Dict, Sequence

import pandas as pd

import results_store
from resampling_engine import ranking, reporting
from resampling_engine.benchmark import AblationFlags, BenchmarkConfig, run_benchmark
from resampling_engine.errors import ConfigError

_logger = logging.getLogger(__name__)

DROPS = {
    "ac": {"use_ac": False},
    "wgan_gp": {"loss_mode": "vanilla"},
    "categorical": {"naive_categorical": True},
}
DEFAULT_VARIANTS = [["wgan_gp"], ["ac"], ["categorical"]]
ABLATION_DIR = "ablation"


def variant_name(drops: Sequence[str]) -> str:
    ordered = [d for d in DROPS if d in set(drops)]
    return "no_" + "_".join(ordered)


def variant_flags(drops: Sequence[str]) -> AblationFlags:
    unknown = sorted(set(drops) - set(DROPS))
    if unknown:
        raise ConfigError(f"Unknown ablation component(s) {unknown}; choose from {list(DROPS)}")
    if not drops:
        raise ConfigError("An ablation variant needs at least one component to drop")
    updates = {}
    for drop in drops:
        updates.update(DROPS[drop])
    return AblationFlags(**updates)


def _has_records(results_dir: Path, config_hash: str) -> bool:
    stored = results_store.read_config(results_dir)
    return stored.get("config_hash") == config_hash and bool(results_store.read_records(results_dir))


def ablate(config: BenchmarkConfig, variants: Sequence[Sequence[str]] = None) -> pd.DataFrame:
    """
    Run each ablation variant of the config's cWGAN method and emit counterfactual ranks.

    The full benchmark is run first when its results are not already stored.
    Each variant runs the cWGAN alone, on the same datasets and seeds, with the
    given components dropped.

    Args:
        config: Benchmark config containing a cWGAN method.
        variants: Lists of components to drop together ("ac", "wgan_gp", "categorical").

    Returns:
        Counterfactual summary, one column per (variant, dataset).
    """
    variants = [list(v) for v in (variants or DEFAULT_VARIANTS)]
    gans = [m for m in config.methods if m.tag == "cwgan"]
    if not gans:
        raise ConfigError("Ablation needs a cwgan method in the benchmark config")
    original = gans[0]

    # 1. Baseline run
    base_dir = Path(config.output_dir)
    if not _has_records(base_dir, config.config_hash):
        _logger.info("No stored baseline for config %s, running the full benchmark", config.config_hash[:12])
        run_benchmark(config)
    records = results_store.records_frame(base_dir)

    # 2. Variants
    frames = [records]
    labels: Dict[str, str] = {}
    for drops in variants:
        name = variant_name(drops)
        label = f"{original.label}_{name}"
        variant = config.model_copy(update={
            "methods": [original.model_copy(update={"name": label})],
            "ablation": variant_flags(drops),
            "output_dir": str(base_dir / ABLATION_DIR / name),
        })
        _logger.info("Ablation '%s': %s", name, variant.ablation.updates())
        run_benchmark(variant)
        frames.append(results_store.records_frame(variant.output_dir))
        labels[name] = label

    # 3. Counterfactual ranks
    combined = pd.concat(frames, ignore_index=True)
    summary = ranking.counterfactual_summary(combined, original.label, labels)
    out_dir = base_dir / ABLATION_DIR
    out_dir.mkdir(parents=True, exist_ok=True)
    summary.to_csv(out_dir / "counterfactual.csv")
    reporting.report(base_dir, out_dir=out_dir / "report", extra_sections={"Ablation": summary})
    _logger.info("Ablation summary written to %s", out_dir)
    return summary
