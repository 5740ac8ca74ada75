"""Binary support vector machines (labels mapped NotInfected -> -1, Infected -> +1).

Linear kernel: deterministic full-batch subgradient descent on the primal
``0.5 ||w||^2 + C * sum(hinge)`` with step ``1/t`` (the full-batch Pegasos
schedule), keeping the best iterate, followed by an exact line search on the
intercept.

Polynomial kernel: dual coordinate ascent over the maximal violating pair
(first-order working-set selection), stopped when the KKT gap falls below
``tol``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import SingleClassTraining
from .specs import SVMSpec

TAU = 1e-12


def poly_kernel(A, B, gamma: float, coef0: float, degree: int) -> np.ndarray:
    return (gamma * (np.asarray(A, dtype=np.float64) @ np.asarray(B, dtype=np.float64).T) + coef0) ** degree


@dataclass(eq=False)
class SVMModel:
    spec: SVMSpec
    intercept: float
    n_features: int
    weights: Optional[np.ndarray] = None  # linear
    support_vectors: Optional[np.ndarray] = None  # poly
    dual_coef: Optional[np.ndarray] = None  # alpha_i * y_i, poly
    n_iter: int = 0

    def decision_score(self, X) -> np.ndarray:
        """Signed margin; positive means Infected."""
        X = np.asarray(X, dtype=np.float64)
        if self.spec.kernel == "linear":
            return X @ self.weights + self.intercept
        K = poly_kernel(X, self.support_vectors, self.spec.gamma, self.spec.coef0, self.spec.degree)
        return K @ self.dual_coef + self.intercept

    def predict(self, X) -> np.ndarray:
        return (self.decision_score(X) > 0).astype(np.int64)


def _signed(y) -> np.ndarray:
    y = np.asarray(y)
    if len(np.unique(y)) < 2:
        raise SingleClassTraining("SVM needs both classes in training data")
    return np.where(y == 1, 1.0, -1.0)


def hinge_objective(w, b, X, s, C) -> float:
    margins = s * (X @ w + b)
    return 0.5 * float(w @ w) + C * float(np.maximum(0.0, 1.0 - margins).sum())


def best_intercept(scores, s) -> float:
    """Exact minimizer of sum(hinge(s * (scores + b))) over b.

    The objective is convex and piecewise linear with kinks at
    ``b = s_i - scores_i``; the smallest minimizing kink is returned.
    """
    kinks = np.unique(s - scores)
    losses = np.maximum(0.0, 1.0 - s[None, :] * (scores[None, :] + kinks[:, None])).sum(axis=1)
    return float(kinks[int(np.argmin(losses))])


def _fit_linear(X, s, spec: SVMSpec) -> SVMModel:
    n, d = X.shape
    C = spec.C
    w, b = np.zeros(d), 0.0
    best = (hinge_objective(w, b, X, s, C), w, b)
    it = 0
    for it in range(1, spec.max_iters + 1):
        viol = s * (X @ w + b) < 1.0
        gw = w - C * (s[viol] @ X[viol])
        gb = -C * float(s[viol].sum())
        if np.sqrt(gw @ gw + gb * gb) < spec.tol:
            break
        w, b = w - gw / it, b - gb / it
        obj = hinge_objective(w, b, X, s, C)
        if obj < best[0]:
            best = (obj, w, b)
    _, w, b = best
    b = best_intercept(X @ w, s)
    return SVMModel(spec, b, d, weights=w, n_iter=it)


def _fit_poly(X, s, spec: SVMSpec) -> SVMModel:
    n, d = X.shape
    C = spec.C
    K = poly_kernel(X, X, spec.gamma, spec.coef0, spec.degree)
    alpha = np.zeros(n)
    f = np.zeros(n)  # f_k = sum_l alpha_l s_l K_kl
    it = 0
    m_up = m_low = 0.0
    for it in range(1, spec.max_iters + 1):
        v = s - f  # = -s * gradient of the dual objective
        up = ((s > 0) & (alpha < C)) | ((s < 0) & (alpha > 0))
        low = ((s < 0) & (alpha < C)) | ((s > 0) & (alpha > 0))
        i = int(np.argmax(np.where(up, v, -np.inf)))
        j = int(np.argmin(np.where(low, v, np.inf)))
        m_up, m_low = v[i], v[j]
        if m_up - m_low < spec.tol:
            break
        eta = max(K[i, i] + K[j, j] - 2.0 * K[i, j], TAU)
        if s[i] == s[j]:
            lo, hi = max(0.0, alpha[i] + alpha[j] - C), min(C, alpha[i] + alpha[j])
        else:
            lo, hi = max(0.0, alpha[j] - alpha[i]), min(C, C + alpha[j] - alpha[i])
        # E_i - E_j = (f_i - s_i) - (f_j - s_j) = m_low - m_up
        aj = float(np.clip(alpha[j] + s[j] * (m_low - m_up) / eta, lo, hi))
        ai = alpha[i] + s[i] * s[j] * (alpha[j] - aj)
        di, dj = ai - alpha[i], aj - alpha[j]
        alpha[i], alpha[j] = ai, aj
        f += di * s[i] * K[:, i] + dj * s[j] * K[:, j]
    v = s - f
    free = (alpha > TAU) & (alpha < C - TAU)
    b = float(v[free].mean()) if free.any() else 0.5 * (m_up + m_low)
    sv = alpha > 0
    return SVMModel(spec, b, d, support_vectors=X[sv].copy(), dual_coef=(alpha * s)[sv], n_iter=it)


def fit_svm(X, y, spec: SVMSpec = SVMSpec(), seed: int = 0) -> SVMModel:
    """Train an SVM. Both solvers are deterministic; ``seed`` is accepted for
    interface uniformity and unused."""
    X = np.asarray(X, dtype=np.float64)
    s = _signed(y)
    if spec.kernel == "linear":
        return _fit_linear(X, s, spec)
    return _fit_poly(X, s, spec)
