"""PLS-DA: NIPALS PLS1 regression on a 0/1 class indicator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SingleClassTraining
from .specs import PLSDASpec

MIN_SCORE_NORM2 = 1e-12


@dataclass(eq=False)
class PLSDAModel:
    weights: np.ndarray  # (a, d) unit-norm w_a
    loadings: np.ndarray  # (a, d) p_a
    y_loadings: np.ndarray  # (a,) q_a
    x_mean: np.ndarray
    y_mean: float
    spec: PLSDASpec

    @property
    def n_components(self) -> int:
        return len(self.y_loadings)

    @property
    def n_features(self) -> int:
        return len(self.x_mean)

    def transform(self, X) -> np.ndarray:
        """Score vectors t_a(x) obtained by replaying the deflation on new rows."""
        Xa = np.asarray(X, dtype=np.float64) - self.x_mean
        T = np.empty((len(Xa), self.n_components))
        for a in range(self.n_components):
            t = Xa @ self.weights[a]
            T[:, a] = t
            Xa = Xa - np.outer(t, self.loadings[a])
        return T

    def decision_score(self, X) -> np.ndarray:
        """Predicted indicator y-hat."""
        return self.y_mean + self.transform(X) @ self.y_loadings

    def predict(self, X) -> np.ndarray:
        return (self.decision_score(X) > self.spec.threshold).astype(np.int64)


def fit_plsda(X, y, spec: PLSDASpec = PLSDASpec()) -> PLSDAModel:
    """Sequential PLS1 components on centered X and centered y.

    ``w = X_a' y_a / ||X_a' y_a||``, ``t = X_a w``, ``p = X_a' t / t't``,
    ``q = y_a' t / t't``, then both X and y are deflated. Extraction stops
    early when ``||t||^2`` or ``||X_a' y_a||`` vanishes; the achieved count is
    ``n_components`` of the returned model.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(np.unique(y)) < 2:
        raise SingleClassTraining("PLS-DA needs both classes in training data")
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xa = X - x_mean
    ya = y - y_mean
    W, P, Q = [], [], []
    for _ in range(spec.n_components):
        w = Xa.T @ ya
        norm = np.linalg.norm(w)
        if not norm > 0:
            break
        w = w / norm
        t = Xa @ w
        tt = float(t @ t)
        if tt < MIN_SCORE_NORM2:
            break
        p = Xa.T @ t / tt
        q = float(ya @ t) / tt
        Xa = Xa - np.outer(t, p)
        ya = ya - q * t
        W.append(w)
        P.append(p)
        Q.append(q)
    d = X.shape[1]
    return PLSDAModel(np.array(W).reshape(-1, d), np.array(P).reshape(-1, d),
                      np.array(Q, dtype=np.float64), x_mean, y_mean, spec)
