"""
Cross-validated grid search over GAN training settings.
"""
import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from sklearn.model_selection import StratifiedKFold

from resampling_engine.classifiers import ClassifierSpec, fit_predict
from resampling_engine.core.preprocess import EncodedMatrix
from resampling_engine.errors import TrainingError
from resampling_engine.gan.config import GanConfig, GridSpec
from resampling_engine.gan.training import TrainedGan, sample_encoded, train_cwgan
from resampling_engine.metrics import auc_roc
from resampling_engine.seeding import derive_seed

_logger = logging.getLogger(__name__)


@dataclass
class GridSearchResult:
    best: GanConfig
    scores: List[Tuple[GanConfig, float]]
    trainings: int


def balance_with_gan(gan: TrainedGan, encoded: EncodedMatrix, seed: int) -> EncodedMatrix:
    """Append generated minority rows until both classes are the same size."""
    labels = encoded.labels
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    minority = 1 if n_pos <= n_neg else 0
    deficit = abs(n_neg - n_pos)
    synth = sample_encoded(gan, deficit, seed, label=minority)
    return EncodedMatrix(values=np.vstack([encoded.values, synth.values]), layout=encoded.layout,
                         labels=np.concatenate([labels, synth.labels]))


def grid_search(encoded: EncodedMatrix, grid: GridSpec, base: GanConfig, seed: int) -> GridSearchResult:
    """
    Train one GAN per grid cell and fold, oversample the fold, fit the benchmark
    random forest and score AUC-ROC on the held-out part. The cell with the best
    mean score wins; ties go to the earlier cell in grid order.
    """
    labels = encoded.labels
    if labels is None:
        raise TrainingError("Grid search needs labelled data")
    splitter = StratifiedKFold(n_splits=grid.folds, shuffle=True, random_state=seed % (2 ** 32))
    splits = list(splitter.split(encoded.values, labels))
    forest = ClassifierSpec(algo="random_forest")

    scores = []
    trainings = 0
    best, best_score = None, -np.inf
    cells = grid.cells(base)
    for c, cell in enumerate(cells):
        fold_scores = []
        for f, (train_idx, test_idx) in enumerate(splits):
            train, test = encoded.subset(train_idx), encoded.subset(test_idx)
            cell_seed = derive_seed(seed, "grid", c, f)
            gan = train_cwgan(train, cell, cell_seed)
            trainings += 1
            balanced = balance_with_gan(gan, train, derive_seed(cell_seed, "sample"))
            proba = fit_predict(forest, balanced.values, balanced.labels, test.values, seed=cell_seed)
            fold_scores.append(auc_roc(proba, test.labels))

        mean = float(np.mean(fold_scores))
        scores.append((cell, mean))
        _logger.info("Grid cell %d/%d (epochs=%d, gen_layers=%s, extra_numeric_layer=%s): AUC-ROC %.4f",
                     c + 1, len(cells), cell.epochs, list(cell.gen_layers), cell.extra_numeric_layer, mean)
        if mean > best_score:
            best, best_score = cell, mean

    _logger.info("Selected epochs=%d, gen_layers=%s, extra_numeric_layer=%s",
                 best.epochs, list(best.gen_layers), best.extra_numeric_layer)
    return GridSearchResult(best=best, scores=scores, trainings=trainings)
