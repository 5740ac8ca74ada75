"""Binary logistic regression by full-batch gradient descent."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from ..errors import SingleClassTraining
from .specs import LogisticSpec


@dataclass(eq=False)
class LogisticModel:
    weights: np.ndarray
    intercept: float
    spec: LogisticSpec
    n_iter: int = 0

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def decision_score(self, X) -> np.ndarray:
        """P(Infected | x)."""
        return expit(np.asarray(X, dtype=np.float64) @ self.weights + self.intercept)

    def predict(self, X) -> np.ndarray:
        return (self.decision_score(X) > 0.5).astype(np.int64)


def cross_entropy(model: LogisticModel, X, y) -> float:
    """Mean binary cross-entropy (no penalty term)."""
    z = np.asarray(X, dtype=np.float64) @ model.weights + model.intercept
    y = np.asarray(y, dtype=np.float64)
    # log(1 + e^z) - y z, computed stably
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def fit_logistic(X, y, spec: LogisticSpec = LogisticSpec()) -> LogisticModel:
    """Minimize mean cross-entropy + lam * penalty from zero weights.

    L2 uses the penalty ``||w||^2 / 2``; L1 uses ``||w||_1`` with a proximal
    (soft-threshold) step. The intercept is never penalized. Iteration stops
    after ``max_iters`` steps or once the (proximal) gradient norm drops
    below ``tol``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if len(np.unique(y)) < 2:
        raise SingleClassTraining("logistic regression needs both classes in training data")
    n, d = X.shape
    w = np.zeros(d)
    b = 0.0
    lr, lam = spec.learning_rate, spec.lam
    it = 0
    for it in range(1, spec.max_iters + 1):
        r = expit(X @ w + b) - y
        gw = X.T @ r / n
        gb = float(r.mean())
        if spec.penalty == "l2":
            gw = gw + lam * w
        if spec.penalty == "l1":
            w_new = soft_threshold(w - lr * gw, lr * lam)
            step_w = (w - w_new) / lr
        else:
            w_new = w - lr * gw
            step_w = gw
        if np.sqrt(step_w @ step_w + gb * gb) < spec.tol:
            break
        w, b = w_new, b - lr * gb
    return LogisticModel(w, b, spec, it)
