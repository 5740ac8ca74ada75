"""Feature matrices, standardization, Gram-matrix PCA and top-k selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateData, DimensionMismatch, LengthMismatch
from .models import ForestSpec, LogisticSpec, fit_forest, fit_logistic

log = logging.getLogger(__name__)

# relative eigenvalue cutoff for the numerical rank of the centered data
RANK_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    values: np.ndarray
    feature_names: tuple
    sample_ids: tuple

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"feature values must be 2D, got shape {values.shape}")
        names, ids = tuple(self.feature_names), tuple(self.sample_ids)
        if len(names) != values.shape[1] or len(ids) != values.shape[0]:
            raise ValueError(f"{values.shape} values with {len(names)} names and {len(ids)} ids")
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        if not np.all(np.isfinite(values)):
            raise ValueError("feature values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "sample_ids", ids)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @classmethod
    def from_array(cls, values, prefix: str = "f", sample_ids: Optional[Sequence[str]] = None):
        values = np.asarray(values, dtype=np.float64)
        n, d = values.shape
        ids = tuple(sample_ids) if sample_ids is not None else tuple(str(i) for i in range(n))
        return cls(values, tuple(f"{prefix}{j}" for j in range(d)), ids)

    def take_columns(self, indices) -> "FeatureMatrix":
        indices = list(indices)
        return FeatureMatrix(self.values[:, indices], tuple(self.feature_names[i] for i in indices),
                             self.sample_ids)


def _as_values(X) -> np.ndarray:
    return X.values if isinstance(X, FeatureMatrix) else np.asarray(X, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class Standardizer:
    means: np.ndarray
    stds: np.ndarray

    def transform(self, X) -> np.ndarray:
        X = _as_values(X)
        if X.shape[-1] != len(self.means):
            raise DimensionMismatch(f"standardizer expects {len(self.means)} columns, got {X.shape[-1]}")
        return (X - self.means) / self.stds


def fit_standardizer(X) -> Standardizer:
    X = _as_values(X)
    if len(X) < 2:
        raise ValueError("standardization needs at least 2 samples")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    # constant columns: relative spread at rounding level
    flat = stds <= 1e-12 * np.maximum(1.0, np.abs(means))
    stds = np.where(flat, 1.0, stds)
    return Standardizer(means, stds)


def standardize_fit_transform(X: FeatureMatrix):
    """Return ``(X', means, stds)`` with zero-mean, unit population-std columns.

    Constant columns become all zero and record a std of 1.
    """
    scaler = fit_standardizer(X)
    values = scaler.transform(X)
    if isinstance(X, FeatureMatrix):
        out = FeatureMatrix(values, X.feature_names, X.sample_ids)
    else:
        out = FeatureMatrix.from_array(values)
    return out, scaler.means, scaler.stds


@dataclass(frozen=True, eq=False)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # (k, d), orthonormal rows
    explained_variance: np.ndarray  # sample variance (ddof=1) of each score column
    explained_variance_ratio: np.ndarray
    requested_components: int = 0

    @property
    def n_components(self) -> int:
        return len(self.explained_variance)

    @property
    def clamped(self) -> bool:
        return self.requested_components > self.n_components


def pca_fit(X, k: int) -> PcaModel:
    """PCA through the eigendecomposition of the n x n Gram matrix of centered rows.

    With ``Xc = U S V'`` the Gram matrix ``Xc Xc'`` has eigenpairs
    ``(s_i^2, u_i)``, and the principal axes are ``v_i = Xc' u_i / s_i``.
    ``k`` is clamped to the numerical rank of ``Xc``. Each component is
    sign-flipped so that its largest-magnitude entry is positive.
    """
    X = _as_values(X)
    n, d = X.shape
    if n < 2:
        raise ValueError("PCA needs at least 2 samples")
    if k < 1:
        raise ValueError("k must be >= 1")
    mean = X.mean(axis=0)
    Xc = X - mean
    gram = Xc @ Xc.T
    evals, evecs = np.linalg.eigh(gram)
    order = np.argsort(evals, kind="stable")[::-1]
    evals, evecs = evals[order], evecs[:, order]
    top = evals[0] if len(evals) else 0.0
    if not top > 0:
        raise DegenerateData("all rows are identical; centered data has rank 0")
    rank = int(np.count_nonzero(evals > RANK_RTOL * top * max(n, 1)))
    keep = min(int(k), rank)
    if keep < k:
        log.info("PCA: requested %d components, clamped to rank %d", k, keep)
    s = np.sqrt(evals[:keep])
    components = (Xc.T @ evecs[:, :keep] / s).T
    # re-orthonormalize to remove the rounding of the division by s
    q, r = np.linalg.qr(components.T)
    components = (q * np.sign(np.diag(r))).T
    pivot = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(keep), pivot])
    components = np.ascontiguousarray(components * signs[:, None])
    total = float(np.trace(gram))
    explained = evals[:keep] / (n - 1)
    ratio = evals[:keep] / total
    return PcaModel(mean, components, explained, ratio, int(k))


def pca_transform(model: PcaModel, X, sample_ids: Optional[Sequence[str]] = None) -> FeatureMatrix:
    values = _as_values(X)
    if values.ndim != 2 or values.shape[1] != len(model.mean):
        raise DimensionMismatch(f"PCA model expects {len(model.mean)} columns, got shape {values.shape}")
    scores = (values - model.mean) @ model.components.T
    if sample_ids is None:
        sample_ids = X.sample_ids if isinstance(X, FeatureMatrix) else [str(i) for i in range(len(values))]
    names = tuple(f"PC{i + 1}" for i in range(model.n_components))
    return FeatureMatrix(scores, names, tuple(sample_ids))


@dataclass(frozen=True, eq=False)
class SelectionMask:
    kept_indices: np.ndarray  # strictly increasing
    scores: np.ndarray  # importance of each kept feature, aligned with kept_indices
    n_source_features: int
    method: str = "importance"
    clamped: bool = False

    def apply(self, X) -> np.ndarray:
        values = _as_values(X)
        if values.shape[-1] != self.n_source_features:
            raise DimensionMismatch(f"selection expects {self.n_source_features} columns, "
                                    f"got {values.shape[-1]}")
        return values[..., self.kept_indices]


SELECTION_FOREST = ForestSpec(n_trees=100, features_per_split="sqrt")
SELECTION_LOGISTIC = LogisticSpec(penalty="l2", lam=0.01, learning_rate=0.1, max_iters=500)


def feature_scores(X, labels, method: str, seed: int = 0) -> np.ndarray:
    values = _as_values(X)
    if method == "importance":
        return fit_forest(values, labels, SELECTION_FOREST, seed).importances
    if method == "abs_weight":
        return np.abs(fit_logistic(values, labels, SELECTION_LOGISTIC).weights)
    raise ValueError(f"unknown selection method {method!r}")


def select_top_k(X, labels, k: int, method: str = "importance", seed: int = 0) -> SelectionMask:
    """Keep the ``k`` highest-scoring features (ties to the lower index).

    ``importance`` ranks by impurity importances of a seeded 100-tree forest;
    ``abs_weight`` by absolute coefficients of an L2 logistic fit. ``k``
    beyond the feature count is clamped and flagged.
    """
    values = _as_values(X)
    labels = np.asarray(labels)
    if len(labels) != len(values):
        raise LengthMismatch(f"{len(labels)} labels for {len(values)} rows")
    if k < 1:
        raise ValueError("k must be >= 1")
    d = values.shape[1]
    clamped = k > d
    if clamped:
        log.warning("select_top_k: k=%d exceeds %d features; keeping all", k, d)
    k = min(k, d)
    scores = feature_scores(values, labels, method, seed)
    ranked = np.lexsort((np.arange(d), -scores))[:k]
    kept = np.sort(ranked)
    return SelectionMask(kept, scores[kept], d, method, clamped)
