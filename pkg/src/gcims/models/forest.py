"""Random forest of CART trees with hard majority voting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SingleClassTraining
from ..seeding import derive_rng
from .specs import ForestSpec
from .tree import DecisionTree, grow_tree


@dataclass(eq=False)
class RandomForest:
    trees: list
    importances: np.ndarray
    n_features: int
    spec: ForestSpec
    seed: int

    def votes(self, X) -> np.ndarray:
        return np.column_stack([t.predict(X) for t in self.trees])

    def decision_score(self, X) -> np.ndarray:
        """Fraction of trees voting Infected."""
        return self.votes(X).mean(axis=1)

    def predict(self, X) -> np.ndarray:
        v = self.votes(X)
        # strict majority; a tie goes to NotInfected
        return (2 * v.sum(axis=1) > v.shape[1]).astype(np.int64)


def fit_forest(X, y, spec: ForestSpec = ForestSpec(), seed: int = 0) -> RandomForest:
    """Grow ``spec.n_trees`` trees; tree ``i`` draws from the stream ``(seed, i)``.

    Each tree sees a bootstrap resample (when enabled) and considers
    ``spec.features_per_split`` random features at every node. Importances are
    per-tree normalized impurity decreases, averaged and renormalized.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise SingleClassTraining("random forest needs both classes in training data")
    n, d = X.shape
    m = spec.n_split_features(d)
    trees: list[DecisionTree] = []
    per_tree = np.zeros((spec.n_trees, d))
    for i in range(spec.n_trees):
        rng = derive_rng(seed, i)
        if spec.bootstrap:
            rows = rng.integers(0, n, size=n)
            Xt, yt = X[rows], y[rows]
        else:
            Xt, yt = X, y
        tree = grow_tree(Xt, yt, spec, spec.max_depth, spec.min_samples_leaf,
                         n_split_features=m, rng=rng)
        trees.append(tree)
        per_tree[i] = tree.feature_importances
    importances = per_tree.mean(axis=0)
    total = importances.sum()
    if total > 0:
        importances = importances / total
    return RandomForest(trees, importances, d, spec, int(seed))
