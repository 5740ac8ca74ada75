import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcims.errors import DimensionMismatch, EmptyNode, SingleClassTraining
from gcims.models import (ForestSpec, LogisticModel, LogisticSpec, PLSDASpec, RandomForest,
                          SVMSpec, TreeSpec, cross_entropy, decision_score, fit, fit_forest,
                          fit_logistic, fit_plsda, fit_svm, fit_tree, gini_impurity, predict)

XOR_X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
XOR_Y = np.array([0, 1, 1, 0])


def gini_counts(pos, n):
    if n == 0:
        return 0.0
    p = pos / n
    return 1.0 - p * p - (1 - p) * (1 - p)


def best_stump(X, y):
    """Exhaustive search over every feature and every midpoint threshold.

    Returns None when no split exists (pure node or constant features).
    Ties: lower feature, then lower threshold.
    """
    n, d = X.shape
    if y.min() == y.max():
        return None
    best = None
    for f in range(d):
        values = sorted(set(X[:, f].tolist()))
        for lo, hi in zip(values, values[1:]):
            thr = (lo + hi) / 2
            left = y[X[:, f] <= thr]
            right = y[X[:, f] > thr]
            score = (len(left) * gini_counts(left.sum(), len(left))
                     + len(right) * gini_counts(right.sum(), len(right))) / n
            if best is None or score < best[2] - 1e-12:
                best = (f, thr, score)
    return best


def stump_predict(X, y, stump, Xq):
    if stump is None:
        return np.full(len(Xq), int(y.sum() * 2 > len(y)))
    f, thr, _ = stump
    left = y[X[:, f] <= thr]
    right = y[X[:, f] > thr]
    return np.where(Xq[:, f] <= thr, int(left.sum() * 2 > len(left)), int(right.sum() * 2 > len(right)))


# --- gini ---

@pytest.mark.parametrize("counts,value", [((4, 0), 0.0), ((2, 2), 0.5), ((3, 1), 0.375), ((0, 7), 0.0)])
def test_gini(counts, value):
    assert gini_impurity(counts) == pytest.approx(value, abs=1e-15)


def test_gini_empty():
    with pytest.raises(EmptyNode):
        gini_impurity((0, 0))


# --- trees ---

def test_pure_dataset_single_leaf():
    t = fit_tree(np.arange(6.0).reshape(3, 2), np.array([1, 1, 1]))
    assert t.n_nodes == 1 and predict(t, np.zeros((2, 2))).tolist() == [1, 1]


def test_xor_depth_two():
    t = fit_tree(XOR_X, XOR_Y, TreeSpec(max_depth=2))
    assert predict(t, XOR_X).tolist() == XOR_Y.tolist()


def test_xor_depth_one_cannot():
    t = fit_tree(XOR_X, XOR_Y, TreeSpec(max_depth=1))
    assert np.mean(predict(t, XOR_X) == XOR_Y) <= 0.75


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_stump_matches_exhaustive(n, d, seed):
    r = np.random.default_rng(seed)
    X = r.integers(0, 4, size=(n, d)).astype(float) + r.choice([0.0, 0.5], size=(n, d))
    y = r.integers(0, 2, size=n)
    t = fit_tree(X, y, TreeSpec(max_depth=1))
    oracle = best_stump(X, y)
    if oracle is None:
        assert t.n_nodes == 1
    else:
        assert (int(t.feature[0]), float(t.threshold[0])) == (oracle[0], oracle[1])
    grid = np.array(list(itertools.product(np.arange(-0.5, 4.5, 0.25), repeat=d)))
    assert np.array_equal(predict(t, grid), stump_predict(X, y, oracle, grid))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([np.exp, np.cbrt, lambda v: 3 * v - 7]))
def test_tree_monotone_invariance(seed, fn):
    r = np.random.default_rng(seed)
    X = r.normal(size=(6, 3))
    y = r.integers(0, 2, 6)
    col = int(r.integers(0, 3))
    Xt = X.copy()
    Xt[:, col] = fn(Xt[:, col])
    Q = X[r.integers(0, 6, 10)]
    Qt = Q.copy()
    Qt[:, col] = fn(Qt[:, col])
    assert np.array_equal(predict(fit_tree(X, y), Q), predict(fit_tree(Xt, yt := y), Qt))
    if y.min() != y.max():
        spec = ForestSpec(n_trees=5)
        assert np.array_equal(predict(fit_forest(X, y, spec, 4), Q),
                              predict(fit_forest(Xt, yt, spec, 4), Qt))


def test_min_samples_leaf_respected(rng):
    X = rng.normal(size=(40, 3))
    y = (X[:, 0] > 0).astype(int)
    t = fit_tree(X, y, TreeSpec(max_depth=50, min_samples_leaf=5))
    leaves = t.feature < 0
    assert t.counts[leaves].sum(axis=1).min() >= 5


def test_max_depth_respected(rng):
    X = rng.normal(size=(60, 4))
    y = rng.integers(0, 2, 60)
    assert fit_tree(X, y, TreeSpec(max_depth=3)).depth <= 3


# --- logistic ---

def test_zero_model_half():
    m = LogisticModel(np.zeros(3), 0.0, LogisticSpec())
    assert np.all(m.decision_score(np.random.default_rng(0).normal(size=(5, 3))) == 0.5)


def test_logistic_1d():
    X = np.array([[-1.0], [1.0]])
    y = np.array([0, 1])
    m = fit_logistic(X, y, LogisticSpec(lam=0.0))
    assert m.weights[0] > 0
    assert predict(m, X).tolist() == [0, 1]


def test_l1_huge_lambda_prior():
    X = np.random.default_rng(1).normal(size=(40, 4))
    y = np.array([1] * 30 + [0] * 10)
    m = fit_logistic(X, y, LogisticSpec(penalty="l1", lam=1e6, max_iters=5000))
    assert np.all(m.weights == 0)
    assert m.intercept == pytest.approx(np.log(30 / 10), abs=1e-3)


def test_no_penalty_beats_zero_model(rng):
    X = rng.normal(size=(50, 3))
    y = (X @ [1.0, -2.0, 0.5] + rng.normal(0, 1, 50) > 0).astype(int)
    m = fit_logistic(X, y, LogisticSpec(lam=0.0))
    zero = LogisticModel(np.zeros(3), 0.0, LogisticSpec())
    assert cross_entropy(m, X, y) <= cross_entropy(zero, X, y)


def test_logistic_single_class():
    with pytest.raises(SingleClassTraining):
        fit_logistic(np.ones((3, 2)), np.ones(3))


# --- forest ---

def test_degenerate_forest_is_a_tree(rng):
    X = rng.normal(size=(30, 4))
    y = (X[:, 1] + 0.3 * rng.normal(size=30) > 0).astype(int)
    f = fit_forest(X, y, ForestSpec(n_trees=1, bootstrap=False, features_per_split="all"), seed=7)
    t = fit_tree(X, y, TreeSpec(max_depth=50))  # deeper than 30 samples can go
    Q = rng.normal(size=(100, 4))
    assert np.array_equal(predict(f, Q), predict(t, Q))


def _constant_tree(label):
    return fit_tree(np.array([[0.0], [1.0]]), np.array([label, label]))


def test_majority_vote():
    trees = [_constant_tree(1), _constant_tree(1), _constant_tree(0)]
    f = RandomForest(trees, np.zeros(1), 1, ForestSpec(n_trees=3), 0)
    assert predict(f, np.zeros((1, 1))).tolist() == [1]
    assert decision_score(f, np.zeros((1, 1)))[0] == pytest.approx(2 / 3)


def test_forest_deterministic(rng):
    X = rng.normal(size=(40, 6))
    y = rng.integers(0, 2, 40)
    a = fit_forest(X, y, ForestSpec(n_trees=20), seed=11)
    b = fit_forest(X, y, ForestSpec(n_trees=20), seed=11)
    assert np.array_equal(a.importances, b.importances)
    for ta, tb in zip(a.trees, b.trees):
        assert np.array_equal(ta.feature, tb.feature) and np.array_equal(ta.threshold, tb.threshold)
    c = fit_forest(X, y, ForestSpec(n_trees=20), seed=12)
    assert not np.array_equal(a.importances, c.importances)


def test_forest_importances(rng):
    X = rng.normal(size=(50, 5))
    y = (X[:, 2] > 0).astype(int)
    f = fit_forest(X, y, ForestSpec(n_trees=30), seed=0)
    assert np.all(f.importances >= 0)
    assert f.importances.sum() == pytest.approx(1.0, abs=1e-9)
    assert int(np.argmax(f.importances)) == 2


# --- svm ---

def test_two_points():
    X = np.array([[-1.0, 0.0], [1.0, 0.0]])
    y = np.array([0, 1])
    m = fit_svm(X, y, SVMSpec(kernel="linear", C=10.0))
    assert predict(m, X).tolist() == [0, 1]
    assert decision_score(m, X)[1] > 0 > decision_score(m, X)[0]


def _max_linear_accuracy(X, y):
    """Best accuracy of any line: enumerate directions and every intercept between projections."""
    best = 0.0
    for angle in np.linspace(0, 2 * np.pi, 720, endpoint=False):
        proj = X @ np.array([np.cos(angle), np.sin(angle)])
        cuts = np.concatenate([[proj.min() - 1], (np.sort(proj)[:-1] + np.sort(proj)[1:]) / 2,
                               [proj.max() + 1]])
        for c in cuts:
            best = max(best, float(np.mean((proj > c).astype(int) == y)))
    return best


def test_xor_linear_vs_poly():
    assert _max_linear_accuracy(XOR_X, XOR_Y) == 0.75
    lin = fit_svm(XOR_X, XOR_Y, SVMSpec(kernel="linear", C=1.0))
    assert np.mean(predict(lin, XOR_X) == XOR_Y) <= 0.75
    poly = fit_svm(XOR_X, XOR_Y, SVMSpec(kernel="poly", degree=2, gamma=1.0, coef0=1.0, C=10.0))
    assert np.mean(predict(poly, XOR_X) == XOR_Y) == 1.0


def test_poly_dual_feasible():
    s = 2 * XOR_Y - 1
    m = fit_svm(XOR_X, XOR_Y, SVMSpec(kernel="poly", degree=2, gamma=1.0, coef0=1.0, C=10.0))
    # dual_coef holds alpha_i * s_i of the support vectors
    assert len(m.dual_coef) == 4  # every XOR point is a support vector
    alpha = m.dual_coef * s
    assert np.all(alpha > 0) and np.all(alpha <= 10.0)
    assert abs(m.dual_coef.sum()) < 1e-9


@pytest.mark.parametrize("spec", [SVMSpec(kernel="linear"), SVMSpec(kernel="poly", gamma=0.5)])
def test_svm_sign_agrees(rng, spec):
    X = rng.normal(size=(40, 3))
    y = (X[:, 0] * X[:, 1] > 0).astype(int)
    m = fit_svm(X, y, spec)
    Q = rng.normal(size=(100, 3))
    assert np.array_equal(predict(m, Q), (decision_score(m, Q) > 0).astype(int))


# --- PLS-DA ---

def test_pls_column_equal_to_y():
    y = np.array([0, 1, 1, 0, 1, 0, 0])
    m = fit_plsda(y[:, None].astype(float) * 2.5, y, PLSDASpec(n_components=1))
    assert np.allclose(decision_score(m, y[:, None] * 2.5), y, atol=1e-12)
    assert predict(m, y[:, None] * 2.5).tolist() == y.tolist()


def test_pls_first_weight_formula(rng):
    X = rng.normal(size=(20, 6))
    y = rng.integers(0, 2, 20)
    m = fit_plsda(X, y, PLSDASpec(n_components=1))
    w = (X - X.mean(0)).T @ (y - y.mean())
    assert np.allclose(m.weights[0], w / np.linalg.norm(w), atol=1e-12)


def test_pls_scores_orthogonal(rng):
    X = rng.normal(size=(30, 10))
    y = rng.integers(0, 2, 30)
    m = fit_plsda(X, y, PLSDASpec(n_components=5))
    T = m.transform(X)
    G = T.T @ T
    off = G - np.diag(np.diag(G))
    assert np.max(np.abs(off)) <= 1e-8 * np.max(np.diag(G))


@pytest.mark.parametrize("n,d", [(25, 6), (12, 12), (10, 30)])
def test_pls_full_rank_is_least_squares(rng, n, d):
    X = rng.normal(size=(n, d))
    y = rng.integers(0, 2, n)
    y[:2] = [0, 1]
    rank = np.linalg.matrix_rank(X - X.mean(0))
    m = fit_plsda(X, y, PLSDASpec(n_components=int(rank)))
    A = np.column_stack([np.ones(n), X])
    coef, *_ = np.linalg.lstsq(A, y.astype(float), rcond=None)
    assert np.allclose(decision_score(m, X), A @ coef, atol=1e-6)


# --- dispatch ---

@pytest.mark.parametrize("spec", [TreeSpec(), LogisticSpec(), ForestSpec(n_trees=5), SVMSpec(),
                                  SVMSpec(kernel="poly"), PLSDASpec()])
def test_every_kind_deterministic_and_checks_width(rng, spec):
    X = rng.normal(size=(30, 4))
    y = (X[:, 0] > 0).astype(int)
    a, b = fit(X, y, spec, seed=3), fit(X, y, spec, seed=3)
    Q = rng.normal(size=(20, 4))
    assert np.array_equal(decision_score(a, Q), decision_score(b, Q))
    with pytest.raises(DimensionMismatch):
        predict(a, np.zeros((2, 5)))
