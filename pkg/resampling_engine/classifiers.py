"""
Classifier harness with fixed, untuned settings for the five benchmark learners.
"""
import logging
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict
from sklearn.ensemble import GradientBoostingClassifier, RandomForestClassifier
from sklearn.linear_model import LogisticRegression
from sklearn.neighbors import KNeighborsClassifier
from sklearn.tree import DecisionTreeClassifier

from resampling_engine.errors import ClassifierError

_logger = logging.getLogger(__name__)

ALGORITHMS = ("random_forest", "logistic", "gradient_boosting", "knn", "decision_tree")


class ClassifierSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    algo: Literal["random_forest", "logistic", "gradient_boosting", "knn", "decision_tree"]

    def build(self, seed: int):
        if self.algo == "random_forest":
            return RandomForestClassifier(n_estimators=300, max_features="sqrt", max_depth=None,
                                          bootstrap=True, random_state=seed, n_jobs=1)
        if self.algo == "logistic":
            return LogisticRegression(C=10.0, max_iter=1000)
        if self.algo == "gradient_boosting":
            return GradientBoostingClassifier(n_estimators=100, learning_rate=0.1, max_depth=3,
                                              random_state=seed)
        if self.algo == "knn":
            return KNeighborsClassifier(n_neighbors=5, metric="euclidean")
        return DecisionTreeClassifier(max_depth=None, random_state=seed)


def default_classifiers():
    return [ClassifierSpec(algo=a) for a in ALGORITHMS]


def fit_predict(spec: ClassifierSpec, train_X: np.ndarray, train_y: np.ndarray,
                test_X: np.ndarray, seed: int = 0) -> np.ndarray:
    """
    Fit on the training rows and return P(label = 1) for every test row.

    Raises:
        ClassifierError: if the training labels hold a single class.
    """
    train_y = np.asarray(train_y)
    if len(np.unique(train_y)) < 2:
        raise ClassifierError(f"{spec.algo}: training data holds a single class")
    model = spec.build(seed)
    try:
        model.fit(train_X, train_y)
    except ValueError as e:
        raise ClassifierError(f"{spec.algo} failed to fit: {e}") from e
    positive = list(model.classes_).index(1)
    return model.predict_proba(test_X)[:, positive]
