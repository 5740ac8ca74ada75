"""Hyperparameter specs for the five classifier kinds."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import ClassVar, Optional, Union

from ..errors import ConfigInvalid

KINDS = ("decision_tree", "logistic_regression", "random_forest", "svm", "plsda")
KIND_TAGS = {kind: i for i, kind in enumerate(KINDS)}
ALIASES = {"dt": "decision_tree", "tree": "decision_tree", "lr": "logistic_regression",
           "logistic": "logistic_regression", "rf": "random_forest", "forest": "random_forest",
           "svm": "svm", "pls": "plsda", "plsda": "plsda", "pls-da": "plsda"}
DISPLAY_NAMES = {
    "decision_tree": "Decision Trees",
    "logistic_regression": "Logistic Regression",
    "random_forest": "Random Forest",
    "svm": "Support Vector Machines",
    "plsda": "Partial Least Squares-Discriminant Analysis",
}


def canonical_kind(name: str) -> str:
    key = name.strip().lower()
    if key in KINDS:
        return key
    if key in ALIASES:
        return ALIASES[key]
    raise ConfigInvalid(f"unknown algorithm {name!r}; choose from {', '.join(KINDS)}")


def _need(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigInvalid(msg)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


class _Spec:
    kind: ClassVar[str]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind
        return d

    def params(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TreeSpec(_Spec):
    max_depth: int = 5
    min_samples_leaf: int = 1
    kind: ClassVar[str] = "decision_tree"

    def __post_init__(self):
        _need(_is_int(self.max_depth) and self.max_depth >= 1, "max_depth must be an integer >= 1")
        _need(_is_int(self.min_samples_leaf) and self.min_samples_leaf >= 1,
              "min_samples_leaf must be an integer >= 1")


@dataclass(frozen=True)
class LogisticSpec(_Spec):
    penalty: str = "l2"
    lam: float = 0.01
    learning_rate: float = 0.1
    max_iters: int = 1000
    tol: float = 1e-6
    kind: ClassVar[str] = "logistic_regression"

    def __post_init__(self):
        _need(self.penalty in ("l1", "l2", "none"), "penalty must be l1, l2 or none")
        _need(self.lam >= 0, "lambda must be >= 0")
        _need(self.learning_rate > 0, "learning_rate must be > 0")
        _need(_is_int(self.max_iters) and self.max_iters >= 1, "max_iters must be >= 1")
        _need(self.tol > 0, "tol must be > 0")


@dataclass(frozen=True)
class ForestSpec(_Spec):
    n_trees: int = 100
    max_depth: Optional[int] = None
    min_samples_leaf: int = 1
    bootstrap: bool = True
    features_per_split: Union[str, int] = "sqrt"
    kind: ClassVar[str] = "random_forest"

    def __post_init__(self):
        _need(_is_int(self.n_trees) and self.n_trees >= 1, "n_trees must be >= 1")
        _need(self.max_depth is None or (_is_int(self.max_depth) and self.max_depth >= 1),
              "max_depth must be None or an integer >= 1")
        _need(_is_int(self.min_samples_leaf) and self.min_samples_leaf >= 1,
              "min_samples_leaf must be >= 1")
        fps = self.features_per_split
        _need(fps in ("sqrt", "all") or (_is_int(fps) and fps >= 1),
              "features_per_split must be 'sqrt', 'all' or an integer >= 1")

    def n_split_features(self, n_features: int) -> int:
        fps = self.features_per_split
        if fps == "all":
            return n_features
        if fps == "sqrt":
            return max(1, int(n_features ** 0.5))
        return min(int(fps), n_features)


@dataclass(frozen=True)
class SVMSpec(_Spec):
    kernel: str = "linear"
    degree: int = 2
    gamma: float = 1.0
    coef0: float = 1.0
    C: float = 1.0
    max_iters: int = 2000
    tol: float = 1e-3
    kind: ClassVar[str] = "svm"

    def __post_init__(self):
        _need(self.kernel in ("linear", "poly"), "kernel must be linear or poly")
        _need(_is_int(self.degree) and (self.kernel != "poly" or self.degree >= 2),
              "poly degree must be an integer >= 2")
        _need(self.gamma > 0, "gamma must be > 0")
        _need(self.C > 0, "C must be > 0")
        _need(_is_int(self.max_iters) and self.max_iters >= 1, "max_iters must be >= 1")
        _need(self.tol > 0, "tol must be > 0")


@dataclass(frozen=True)
class PLSDASpec(_Spec):
    n_components: int = 2
    threshold: float = 0.5
    kind: ClassVar[str] = "plsda"

    def __post_init__(self):
        _need(_is_int(self.n_components) and self.n_components >= 1, "n_components must be >= 1")


SPEC_TYPES = {cls.kind: cls for cls in (TreeSpec, LogisticSpec, ForestSpec, SVMSpec, PLSDASpec)}


def spec_from_dict(d: dict) -> _Spec:
    d = dict(d)
    kind = canonical_kind(d.pop("kind"))
    cls = SPEC_TYPES[kind]
    if "lambda" in d:
        d["lam"] = d.pop("lambda")
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    _need(not unknown, f"unknown {kind} hyperparameters: {sorted(unknown)}")
    return cls(**d)
