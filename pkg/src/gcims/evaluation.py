"""Stratified splitting, cross-validated grid search, metrics and the
per-algorithm accuracy report."""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .core import Dataset, SampleLabel
from .errors import ClassTooSmall, ConfigInvalid, KTooLarge, LengthMismatch, SingleClassTraining
from .models import (DISPLAY_NAMES, KINDS, ForestSpec, LogisticSpec, PLSDASpec, SVMSpec,
                     TreeSpec, canonical_kind, fit, predict, decision_score, spec_from_dict)
from .models.specs import KIND_TAGS
from .pipeline import FeatureConfig, TrainedModel, fit_feature_pipeline, preprocess_matrix
from .preprocess import DEFAULT_CONFIG, PreprocessConfig
from .seeding import derive_seed

log = logging.getLogger(__name__)

# stream tags for derive_seed
_SPLIT, _FOLDS, _SELECT, _MODEL = 11, 12, 13, 14

CLASS_ORDER = (0, 1)  # NotInfected first: ties in largest-remainder rounding go to it


# --- splitting ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SplitPlan:
    train_indices: np.ndarray
    test_indices: np.ndarray


@dataclass(frozen=True, eq=False)
class FoldPlan:
    folds: tuple  # of index arrays

    @property
    def k(self) -> int:
        return len(self.folds)

    def train_test(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        test = self.folds[i]
        train = np.sort(np.concatenate([f for j, f in enumerate(self.folds) if j != i]))
        return train, test


def _class_members(labels: np.ndarray) -> list[np.ndarray]:
    return [np.nonzero(labels == c)[0] for c in CLASS_ORDER]


def largest_remainder(quotas: Sequence[float], total: int) -> list[int]:
    """Integer allocation summing to ``total`` closest to ``quotas``.

    Floors first, then one extra unit each to the largest fractional parts;
    equal remainders favour the earlier entry.
    """
    floors = [math.floor(q) for q in quotas]
    spare = total - sum(floors)
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - floors[i]), i))
    for i in order[:max(spare, 0)]:
        floors[i] += 1
    return floors


def stratified_split(labels, test_fraction: float = 0.2, seed: int = 0) -> SplitPlan:
    """Stratified train/test split.

    The test size is ``round(n * test_fraction)`` (half up), shared between
    the classes by largest-remainder rounding of ``class_size * test_fraction``.
    Which members of a class go to test is decided by a seeded shuffle.
    """
    labels = np.asarray(labels)
    if not 0 < test_fraction < 1:
        raise ConfigInvalid(f"test_fraction must lie in (0, 1), got {test_fraction}")
    members = _class_members(labels)
    if any(len(m) == 0 for m in members) or len(labels) != sum(len(m) for m in members):
        raise ClassTooSmall("stratified split needs labels 0/1 with both classes present")
    n = len(labels)
    total = math.floor(n * test_fraction + 0.5)
    counts = largest_remainder([len(m) * test_fraction for m in members], total)
    rng = np.random.default_rng(seed)
    test = []
    for idx, t in zip(members, counts):
        test.append(rng.permutation(idx)[:t])
    test = np.sort(np.concatenate(test))
    train = np.setdiff1d(np.arange(n), test)
    if len(test) == 0 or len(train) == 0:
        raise ClassTooSmall(f"{n} samples at test_fraction={test_fraction} leave an empty side")
    return SplitPlan(train, test)


def stratified_kfold(labels, k: int = 5, seed: int = 0) -> FoldPlan:
    """Per-class round-robin fold assignment after a seeded shuffle.

    The round-robin position carries over from one class to the next, which
    keeps total fold sizes within one of each other.
    """
    labels = np.asarray(labels)
    n = len(labels)
    if int(k) != k or k < 2:
        raise ConfigInvalid(f"number of folds must be an integer >= 2, got {k}")
    if k > n:
        raise KTooLarge(f"{k} folds requested for {n} samples")
    rng = np.random.default_rng(seed)
    assignment = np.empty(n, dtype=np.int64)
    offset = 0
    for idx in _class_members(labels):
        shuffled = rng.permutation(idx)
        assignment[shuffled] = (offset + np.arange(len(shuffled))) % k
        offset = (offset + len(shuffled)) % k
    return FoldPlan(tuple(np.nonzero(assignment == f)[0] for f in range(int(k))))


# --- metrics --------------------------------------------------------------------

@dataclass(frozen=True)
class MetricSet:
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    roc_auc: Optional[float] = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("tp", "fp", "tn", "fn", "accuracy", "precision", "recall", "f1", "roc_auc")}


def roc_auc(scores, labels) -> Optional[float]:
    """Mann-Whitney form of ROC-AUC with midranks for ties; None if a class is missing."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    pos = labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(scores, method="average")
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def compute_metrics(predictions, scores, labels) -> MetricSet:
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    if not (len(predictions) == len(labels) == len(scores)):
        raise LengthMismatch(f"lengths differ: {len(predictions)} predictions, "
                             f"{len(scores)} scores, {len(labels)} labels")
    if len(labels) == 0:
        raise LengthMismatch("metrics need at least one sample")
    p, t = predictions == 1, labels == 1
    tp = int(np.sum(p & t))
    fp = int(np.sum(p & ~t))
    tn = int(np.sum(~p & ~t))
    fn = int(np.sum(~p & t))
    n = len(labels)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return MetricSet(tp, fp, tn, fn, (tp + tn) / n, precision, recall, f1, roc_auc(scores, labels))


# --- grid search ----------------------------------------------------------------

DEFAULT_GRIDS = {
    "decision_tree": [TreeSpec(max_depth=d, min_samples_leaf=m)
                      for d in (2, 3, 5) for m in (1, 3, 5)],
    "logistic_regression": [LogisticSpec(penalty=p, lam=lam)
                            for p in ("l1", "l2") for lam in (0.001, 0.01, 0.1)],
    "random_forest": [ForestSpec(n_trees=t, max_depth=d)
                      for t in (50, 100) for d in (4, 8)],
    "svm": [SVMSpec(kernel="linear", C=c) for c in (0.01, 0.1, 1.0)]
           + [SVMSpec(kernel="poly", degree=2, gamma=g, coef0=1.0, C=c)
              for g in (0.1, 1.0) for c in (0.1, 1.0)],
    "plsda": [PLSDASpec(n_components=a) for a in (1, 2, 3, 4, 6, 8)],
}


def expand_grid(kind: str, grid) -> list:
    """Accept a list of specs, or a mapping of hyperparameter -> candidate values."""
    if isinstance(grid, Mapping):
        keys = list(grid)
        return [spec_from_dict({"kind": kind, **dict(zip(keys, combo))})
                for combo in itertools.product(*(grid[k] for k in keys))]
    return list(grid)


@dataclass(frozen=True)
class GridCell:
    spec: object
    fold_accuracies: tuple
    mean_accuracy: float
    std_accuracy: float


def _fit_or_constant(X, y, spec, seed):
    try:
        return fit(X, y, spec, seed)
    except SingleClassTraining:
        return None


def _fold_accuracy(model, X, y, constant_label) -> float:
    pred = np.full(len(y), constant_label) if model is None else predict(model, X)
    return float(np.mean(pred == y))


def grid_search(X, y, kind: str, grid, folds: FoldPlan, seed: int = 0):
    """Exhaustive CV over ``grid``; returns ``(best_spec, cells)``.

    Cells are scored by mean fold accuracy; the best is the highest mean,
    the earliest cell on ties. A training fold holding a single class falls
    back to predicting that class.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    specs = expand_grid(kind, grid)
    if not specs:
        raise ConfigInvalid(f"empty hyperparameter grid for {kind}")
    cells = []
    for spec in specs:
        accs = []
        for i in range(folds.k):
            tr, te = folds.train_test(i)
            model = _fit_or_constant(X[tr], y[tr], spec, seed)
            accs.append(_fold_accuracy(model, X[te], y[te], int(y[tr][0])))
        accs = np.array(accs)
        cells.append(GridCell(spec, tuple(float(a) for a in accs), float(accs.mean()), float(accs.std())))
    best = max(range(len(cells)), key=lambda i: (cells[i].mean_accuracy, -i))
    return cells[best].spec, cells


# --- full evaluation --------------------------------------------------------------

@dataclass(frozen=True)
class ReportRow:
    algorithm: str
    spec: object
    cv_mean_accuracy: float
    cv_std: float
    test: MetricSet
    n_features: int
    selection: Optional[dict]
    seed: int
    grid: tuple

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "display_name": DISPLAY_NAMES[self.algorithm],
            "selected_hyperparameters": self.spec.params(),
            "cv_mean_accuracy": self.cv_mean_accuracy,
            "cv_std_accuracy": self.cv_std,
            "test_metrics": self.test.to_dict(),
            "feature_count": self.n_features,
            "feature_selection": self.selection,
            "model_seed": self.seed,
            "grid": [{"hyperparameters": c.spec.params(), "fold_accuracies": list(c.fold_accuracies),
                      "mean_accuracy": c.mean_accuracy, "std_accuracy": c.std_accuracy}
                     for c in self.grid],
        }


@dataclass(frozen=True)
class EvaluationReport:
    rows: tuple
    seed: int
    config: dict

    def row(self, algorithm: str) -> ReportRow:
        algorithm = canonical_kind(algorithm)
        for r in self.rows:
            if r.algorithm == algorithm:
                return r
        raise KeyError(algorithm)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "config": self.config, "rows": [r.to_dict() for r in self.rows]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    TABLE_COLUMNS = ("algorithm", "display_name", "cv_mean_accuracy", "cv_std_accuracy",
                     "test_accuracy", "test_precision", "test_recall", "test_f1", "test_roc_auc",
                     "tp", "fp", "tn", "fn", "feature_count", "hyperparameters", "seed")

    def to_table(self, delimiter: str = "\t") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
        w.writerow(self.TABLE_COLUMNS)
        for r in self.rows:
            m = r.test
            w.writerow([r.algorithm, DISPLAY_NAMES[r.algorithm], repr(r.cv_mean_accuracy),
                        repr(r.cv_std), repr(m.accuracy), repr(m.precision), repr(m.recall),
                        repr(m.f1), "" if m.roc_auc is None else repr(m.roc_auc),
                        m.tp, m.fp, m.tn, m.fn, r.n_features,
                        json.dumps(r.spec.params(), sort_keys=True), self.seed])
        return buf.getvalue()


def resolve_algorithms(algorithms) -> list[str]:
    if algorithms is None or algorithms == "all" or algorithms == ["all"]:
        return list(KINDS)
    if isinstance(algorithms, str):
        algorithms = [a for a in algorithms.split(",") if a.strip()]
    kinds = [canonical_kind(a) for a in algorithms]
    # report rows follow the canonical table order
    return [k for k in KINDS if k in kinds]


def evaluate_all(dataset: Dataset, preprocess: PreprocessConfig = DEFAULT_CONFIG,
                 features: FeatureConfig = FeatureConfig(), algorithms="all", seed: int = 42,
                 cv: int = 5, test_fraction: float = 0.2,
                 grids: Optional[Mapping] = None) -> EvaluationReport:
    """Split 80/20 (stratified), tune each algorithm by k-fold grid search on
    the training portion, refit on the whole training portion and score the
    held-out test portion. One split is shared by all algorithms.

    Preprocessing, standardization and PCA are fitted on the training portion
    only; top-k selection is fitted per algorithm on the training portion
    before cross-validation.
    """
    kinds = resolve_algorithms(algorithms)
    y = dataset.labels()
    n = len(y)
    if int(cv) != cv or cv < 2:
        raise ConfigInvalid(f"cv must be an integer >= 2, got {cv}")
    if cv > n:
        raise KTooLarge(f"{cv} folds requested for {n} samples")
    split = stratified_split(y, test_fraction, derive_seed(seed, _SPLIT))
    tr, te = split.train_indices, split.test_indices
    folds = stratified_kfold(y[tr], cv, derive_seed(seed, _FOLDS))

    spectra = dataset.spectra_list()
    flat = preprocess_matrix(spectra, preprocess)
    first = spectra[0]
    base = fit_feature_pipeline(flat[tr], preprocess, first.drift_axis, first.retention_axis,
                                features.n_components)
    F_train, F_test = base.transform_flat(flat[tr]), base.transform_flat(flat[te])
    y_train, y_test = y[tr], y[te]

    grids = dict(DEFAULT_GRIDS, **(grids or {}))
    rows = []
    for kind in kinds:
        tag = KIND_TAGS[kind]
        k, method = features.selection_for(kind)
        pipe = base.with_selection(F_train, y_train, k, method, derive_seed(seed, _SELECT, tag))
        if pipe.selection is not None:
            Xtr, Xte = pipe.selection.apply(F_train), pipe.selection.apply(F_test)
            selection = {"method": method, "k": k, "kept": len(pipe.selection.kept_indices),
                         "clamped": pipe.selection.clamped}
        else:
            Xtr, Xte = F_train, F_test
            selection = None
        model_seed = derive_seed(seed, _MODEL, tag)
        best, cells = grid_search(Xtr, y_train, kind, grids[kind], folds, model_seed)
        model = fit(Xtr, y_train, best, model_seed)
        metrics = compute_metrics(predict(model, Xte), decision_score(model, Xte), y_test)
        best_cell = next(c for c in cells if c.spec == best)
        log.info("%s: cv %.3f test %.3f (%s)", kind, best_cell.mean_accuracy, metrics.accuracy,
                 best.params())
        rows.append(ReportRow(kind, best, best_cell.mean_accuracy, best_cell.std_accuracy, metrics,
                              Xtr.shape[1], selection, model_seed, tuple(cells)))

    counts = {SampleLabel.from_code(c).value: int(np.sum(y == c)) for c in CLASS_ORDER}
    config = {
        "preprocess": preprocess.to_list(),
        "features": features.to_dict(),
        "algorithms": kinds,
        "cv": int(cv),
        "test_fraction": test_fraction,
        "n_samples": n,
        "class_counts": counts,
        "n_train": int(len(tr)),
        "n_test": int(len(te)),
        "test_sample_ids": [dataset.sample_ids[i] for i in te],
        "pca_components": base.pca.n_components,
        "pca_requested": base.pca.requested_components,
        "spectrum_shape": [first.retention_axis.count, first.drift_axis.count],
        "accuracy_note": "cv_mean_accuracy: mean over folds of the training portion; "
                         "test_metrics: held-out split",
    }
    return EvaluationReport(tuple(rows), int(seed), config)


def train_final(dataset: Dataset, algorithm: str,
                preprocess: PreprocessConfig = DEFAULT_CONFIG,
                features: FeatureConfig = FeatureConfig(), seed: int = 42, cv: int = 5,
                grid=None) -> TrainedModel:
    """Tune ``algorithm`` by k-fold grid search on every sample, then refit on all of them.

    Uses the same seed streams as :func:`evaluate_all`, but with no held-out
    split. The returned model carries its full transform chain.
    """
    kind = canonical_kind(algorithm)
    y = dataset.labels()
    if int(cv) != cv or cv < 2:
        raise ConfigInvalid(f"cv must be an integer >= 2, got {cv}")
    if cv > len(y):
        raise KTooLarge(f"{cv} folds requested for {len(y)} samples")
    folds = stratified_kfold(y, cv, derive_seed(seed, _FOLDS))
    spectra = dataset.spectra_list()
    flat = preprocess_matrix(spectra, preprocess)
    first = spectra[0]
    base = fit_feature_pipeline(flat, preprocess, first.drift_axis, first.retention_axis,
                                features.n_components)
    F = base.transform_flat(flat)
    tag = KIND_TAGS[kind]
    k, method = features.selection_for(kind)
    pipe = base.with_selection(F, y, k, method, derive_seed(seed, _SELECT, tag))
    X = pipe.selection.apply(F) if pipe.selection is not None else F
    model_seed = derive_seed(seed, _MODEL, tag)
    best, cells = grid_search(X, y, kind, DEFAULT_GRIDS[kind] if grid is None else grid,
                              folds, model_seed)
    model = fit(X, y, best, model_seed)
    best_cell = next(c for c in cells if c.spec == best)
    run_config = {
        "algorithm": kind,
        "seed": int(seed),
        "cv": int(cv),
        "preprocess": preprocess.to_list(),
        "features": features.to_dict(),
        "n_samples": len(y),
        "training_sample_ids": list(dataset.sample_ids),
        "cv_mean_accuracy": best_cell.mean_accuracy,
        "selected_hyperparameters": best.params(),
    }
    return TrainedModel(pipe, model, best, model_seed, run_config)
