"""CART classification tree with Gini splits (labels coded 0/1, 1 = Infected)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import EmptyNode
from .specs import TreeSpec

LEAF = -1
# impurity differences below this count as ties
TIE_TOL = 1e-12


def gini_impurity(class_counts) -> float:
    counts = np.asarray(class_counts, dtype=np.float64)
    total = counts.sum()
    if not total > 0:
        raise EmptyNode("gini impurity of an empty node")
    p = counts / total
    return float(1.0 - np.sum(p * p))


@dataclass(eq=False)
class DecisionTree:
    """Flat array representation; node 0 is the root, children by index.

    A sample goes left when ``x[feature] <= threshold``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, 2) training class counts per node
    n_features: int
    impurity_decrease: np.ndarray  # per feature, weighted by node share of the root
    spec: TreeSpec = field(default_factory=TreeSpec)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    @property
    def feature_importances(self) -> np.ndarray:
        total = self.impurity_decrease.sum()
        return self.impurity_decrease / total if total > 0 else np.zeros_like(self.impurity_decrease)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            rows = np.nonzero(active)[0]
            cur = node[rows]
            go_left = X[rows, self.feature[cur]] <= self.threshold[cur]
            node[rows] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] != LEAF
        return node

    def decision_score(self, X) -> np.ndarray:
        """Fraction of Infected training samples in the leaf."""
        c = self.counts[self.apply(X)]
        return c[:, 1] / c.sum(axis=1)

    def predict(self, X) -> np.ndarray:
        # majority; ties go to NotInfected
        c = self.counts[self.apply(X)]
        return (c[:, 1] > c[:, 0]).astype(np.int64)


def best_split(X, y, idx, features, min_samples_leaf):
    """Best (feature, threshold, weighted child gini) over ``features`` or None.

    Candidates are midpoints between consecutive distinct sorted values. Ties
    resolve to the lower feature index, then the lower threshold.
    """
    n = len(idx)
    best = None
    ys_all = y[idx]
    for f in sorted(features):
        xs = X[idx, f]
        order = np.argsort(xs, kind="stable")
        xs, ys = xs[order], ys_all[order]
        n_left = np.arange(1, n)
        valid = (xs[1:] > xs[:-1]) & (n_left >= min_samples_leaf) & (n - n_left >= min_samples_leaf)
        if not valid.any():
            continue
        pos_left = np.cumsum(ys)[:-1].astype(np.float64)
        pos_total = float(ys.sum())
        nl = n_left.astype(np.float64)
        nr = n - nl
        pos_right = pos_total - pos_left
        # n * weighted child gini = nl*(1 - pl^2 - ql^2) + nr*(...)
        gl = nl - (pos_left ** 2 + (nl - pos_left) ** 2) / nl
        gr = nr - (pos_right ** 2 + (nr - pos_right) ** 2) / nr
        weighted = (gl + gr) / n
        weighted = np.where(valid, weighted, np.inf)
        i = int(np.argmin(weighted))
        # earliest position within TIE_TOL of the minimum -> lowest threshold
        i = int(np.nonzero(weighted <= weighted[i] + TIE_TOL)[0][0])
        if best is None or weighted[i] < best[2] - TIE_TOL:
            lo, hi = xs[i], xs[i + 1]
            thr = 0.5 * (lo + hi)
            if not lo <= thr < hi:
                thr = lo
            best = (f, float(thr), float(weighted[i]))
    return best


class _Builder:
    def __init__(self, X, y, max_depth: Optional[int], min_samples_leaf: int,
                 n_split_features: Optional[int] = None, rng=None):
        self.X, self.y = X, y
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.n_split_features = n_split_features
        self.rng = rng
        self.n_root = len(y)
        d = X.shape[1]
        self.importance = np.zeros(d)
        self.feature, self.threshold, self.left, self.right, self.counts = [], [], [], [], []

    def _new_node(self, idx):
        pos = int(self.y[idx].sum())
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.counts.append((len(idx) - pos, pos))
        return len(self.feature) - 1

    def _candidate_features(self):
        d = self.X.shape[1]
        if self.n_split_features is None or self.n_split_features >= d:
            return range(d)
        return self.rng.choice(d, size=self.n_split_features, replace=False)

    def build(self, idx, depth=0):
        node = self._new_node(idx)
        neg, pos = self.counts[node]
        if pos == 0 or neg == 0:
            return node
        if self.max_depth is not None and depth >= self.max_depth:
            return node
        if len(idx) < 2 * self.min_samples_leaf:
            return node
        split = best_split(self.X, self.y, idx, self._candidate_features(), self.min_samples_leaf)
        if split is None:
            return node
        f, thr, child_gini = split
        parent_gini = gini_impurity((neg, pos))
        self.importance[f] += len(idx) / self.n_root * (parent_gini - child_gini)
        mask = self.X[idx, f] <= thr
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self.build(idx[mask], depth + 1)
        self.right[node] = self.build(idx[~mask], depth + 1)
        return node

    def result(self, spec) -> DecisionTree:
        return DecisionTree(
            feature=np.array(self.feature, dtype=np.int64),
            threshold=np.array(self.threshold, dtype=np.float64),
            left=np.array(self.left, dtype=np.int64),
            right=np.array(self.right, dtype=np.int64),
            counts=np.array(self.counts, dtype=np.int64).reshape(-1, 2),
            n_features=self.X.shape[1],
            impurity_decrease=np.maximum(self.importance, 0.0),
            spec=spec,
        )


def grow_tree(X, y, spec, max_depth, min_samples_leaf, n_split_features=None, rng=None) -> DecisionTree:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y) or len(y) == 0 or X.shape[1] == 0:
        raise ValueError(f"need a non-empty 2D X matching y, got {X.shape} and {y.shape}")
    builder = _Builder(X, y, max_depth, min_samples_leaf, n_split_features, rng)
    builder.build(np.arange(len(y)))
    return builder.result(spec)


def fit_tree(X, y, spec: TreeSpec = TreeSpec()) -> DecisionTree:
    return grow_tree(X, y, spec, spec.max_depth, spec.min_samples_leaf)
