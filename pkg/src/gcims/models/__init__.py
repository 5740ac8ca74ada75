"""The five classifiers behind one fit / predict / decision_score contract.

Labels are integer coded, 1 = Infected (positive class), 0 = NotInfected.
For every model a higher decision score means "more Infected".
"""

import numpy as np

from ..errors import DimensionMismatch
from .forest import RandomForest, fit_forest
from .logistic import LogisticModel, cross_entropy, fit_logistic
from .plsda import PLSDAModel, fit_plsda
from .specs import (ALIASES, DISPLAY_NAMES, KINDS, ForestSpec, LogisticSpec, PLSDASpec,
                    SVMSpec, TreeSpec, canonical_kind, spec_from_dict)
from .svm import SVMModel, fit_svm
from .tree import DecisionTree, fit_tree, gini_impurity

__all__ = [
    "KINDS", "ALIASES", "DISPLAY_NAMES", "canonical_kind", "spec_from_dict",
    "TreeSpec", "LogisticSpec", "ForestSpec", "SVMSpec", "PLSDASpec",
    "DecisionTree", "LogisticModel", "RandomForest", "SVMModel", "PLSDAModel",
    "gini_impurity", "cross_entropy",
    "fit_tree", "fit_logistic", "fit_forest", "fit_svm", "fit_plsda",
    "fit", "predict", "decision_score", "model_kind",
]


def fit(X, y, spec, seed: int = 0):
    """Dispatch on ``spec.kind``; ``seed`` only matters for random forests."""
    kind = spec.kind
    if kind == "decision_tree":
        return fit_tree(X, y, spec)
    if kind == "logistic_regression":
        return fit_logistic(X, y, spec)
    if kind == "random_forest":
        return fit_forest(X, y, spec, seed)
    if kind == "svm":
        return fit_svm(X, y, spec, seed)
    if kind == "plsda":
        return fit_plsda(X, y, spec)
    raise ValueError(f"unknown model kind {kind!r}")


def model_kind(model) -> str:
    if isinstance(model, DecisionTree):
        return "decision_tree"
    return model.spec.kind


def _checked(model, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise DimensionMismatch(f"model expects {model.n_features} features, got {X.shape[1]}")
    return X


def predict(model, X) -> np.ndarray:
    return model.predict(_checked(model, X))


def decision_score(model, X) -> np.ndarray:
    return model.decision_score(_checked(model, X))
