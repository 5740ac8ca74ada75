"""The fitted transform chain from raw spectra to classifier inputs.

raw spectrum -> preprocessing steps -> flatten -> standardize -> PCA
-> global score scaling -> optional top-k selection -> classifier
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .core import Axis, IMSSpectrum
from .errors import DimensionMismatch
from .features import (PcaModel, SelectionMask, Standardizer, fit_standardizer, pca_fit,
                       select_top_k)
from .preprocess import PreprocessConfig, run_pipeline
from .models import decision_score as _decision_score
from .models import predict as _predict

# per-algorithm default top-k and ranking method; None keeps every component
DEFAULT_SELECTION = {
    "decision_tree": (100, "importance"),
    "logistic_regression": (84, "abs_weight"),
    "random_forest": (100, "importance"),
    "svm": (None, "abs_weight"),
    "plsda": (None, "abs_weight"),
}


@dataclass(frozen=True)
class FeatureConfig:
    """How spectra become features.

    ``k_features`` overrides the per-algorithm top-k for every algorithm,
    each keeping its own ranking method.
    """

    n_components: int = 304
    k_features: Optional[int] = None

    def selection_for(self, kind: str) -> tuple[Optional[int], str]:
        k, method = DEFAULT_SELECTION[kind]
        if self.k_features is not None:
            k = self.k_features
        return k, method

    def to_dict(self) -> dict:
        return {"n_components": self.n_components, "k_features": self.k_features,
                "selection": {kind: list(self.selection_for(kind)) for kind in DEFAULT_SELECTION}}


def preprocess_matrix(spectra: Sequence[IMSSpectrum], config: PreprocessConfig) -> np.ndarray:
    """Preprocess every spectrum and stack the flattened results row-wise."""
    rows = [run_pipeline(s, config).intensity.reshape(-1) for s in spectra]
    return np.vstack(rows)


@dataclass(frozen=True, eq=False)
class FeaturePipeline:
    preprocess: PreprocessConfig
    drift_axis: Axis
    retention_axis: Axis
    standardizer: Standardizer
    pca: PcaModel
    score_scale: float
    selection: Optional[SelectionMask] = None

    @property
    def n_outputs(self) -> int:
        if self.selection is not None:
            return len(self.selection.kept_indices)
        return self.pca.n_components

    def check_axes(self, spectrum: IMSSpectrum) -> None:
        if spectrum.drift_axis != self.drift_axis or spectrum.retention_axis != self.retention_axis:
            raise DimensionMismatch(
                f"{spectrum.sample_id or 'spectrum'}: axes {spectrum.shape} "
                f"do not match training axes ({self.retention_axis.count}, {self.drift_axis.count})")

    def transform_flat(self, flat: np.ndarray) -> np.ndarray:
        """Map preprocessed, flattened rows to classifier features."""
        z = self.standardizer.transform(flat)
        scores = (z - self.pca.mean) @ self.pca.components.T / self.score_scale
        if self.selection is not None:
            scores = self.selection.apply(scores)
        return scores

    def transform(self, spectra: Sequence[IMSSpectrum]) -> np.ndarray:
        for s in spectra:
            self.check_axes(s)
        return self.transform_flat(preprocess_matrix(spectra, self.preprocess))

    def with_selection(self, train_features: np.ndarray, labels, k: Optional[int],
                       method: str, seed: int) -> "FeaturePipeline":
        if k is None:
            return replace(self, selection=None)
        mask = select_top_k(train_features, labels, k, method, seed)
        return replace(self, selection=mask)


def fit_feature_pipeline(flat_train: np.ndarray, preprocess: PreprocessConfig,
                         drift_axis: Axis, retention_axis: Axis,
                         n_components: int) -> FeaturePipeline:
    """Fit standardization and PCA on preprocessed, flattened training rows.

    Scores are divided by the standard deviation of the first component so
    that gradient-based learners see unit-scale inputs; the relative
    geometry of the score space is unchanged.
    """
    scaler = fit_standardizer(flat_train)
    z = scaler.transform(flat_train)
    pca = pca_fit(z, n_components)
    scale = float(np.sqrt(pca.explained_variance[0]))
    return FeaturePipeline(preprocess, drift_axis, retention_axis, scaler, pca, scale)


@dataclass(eq=False)
class TrainedModel:
    """A classifier bundled with the full chain that produced its inputs."""

    features: FeaturePipeline
    classifier: object
    spec: object
    seed: int
    run_config: dict = field(default_factory=dict)

    def decision_score(self, spectra: Sequence[IMSSpectrum]) -> np.ndarray:
        return _decision_score(self.classifier, self.features.transform(spectra))

    def predict(self, spectra: Sequence[IMSSpectrum]) -> np.ndarray:
        return _predict(self.classifier, self.features.transform(spectra))
