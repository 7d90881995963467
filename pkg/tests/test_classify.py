"""Classifiers against brute-force and dense-QP oracles."""

import numpy as np
import pytest

from afdetect import classify as cl
from afdetect.errors import (
    BadKError,
    BadSubspaceError,
    EmptyInputError,
    SingleClassError,
    TooFewRowsError,
)
from oracles import brute_knn_af_fraction, cvxopt_svm_duals, exhaustive_best_split


# -- standardizer -----------------------------------------------------------------

def test_standardizer_hand_oracle():
    st = cl.fit_standardizer(np.array([[1.0], [3.0]]))
    out = cl.apply_standardizer(st, np.array([[1.0], [3.0]]))
    np.testing.assert_allclose(out.ravel(), [-1 / np.sqrt(2), 1 / np.sqrt(2)],
                               rtol=1e-12)


def test_standardizer_constant_column_floored():
    st = cl.fit_standardizer(np.array([[2.0, 1.0], [2.0, 3.0]]))
    out = cl.apply_standardizer(st, np.array([[2.0, 2.0]]))
    assert out[0, 0] == 0.0


def test_standardizer_normalizes_training_rows():
    rng = np.random.default_rng(1)
    x = rng.normal(loc=5.0, scale=3.0, size=(40, 6))
    st = cl.fit_standardizer(x)
    z = cl.apply_standardizer(st, x)
    np.testing.assert_allclose(z.mean(axis=0), 0.0, atol=1e-9)
    np.testing.assert_allclose(z.std(axis=0, ddof=1), 1.0, atol=1e-9)


def test_standardizer_too_few_rows():
    with pytest.raises(TooFewRowsError):
        cl.fit_standardizer(np.array([[1.0, 2.0]]))


# -- decision tree -----------------------------------------------------------------

def test_tree_simple_1d_split():
    t = cl.train_tree(np.array([[1.0], [2.0], [8.0], [9.0]]),
                      np.array([0, 0, 1, 1], dtype=np.uint8))
    assert t.feature[0] == 0
    assert t.threshold[0] == pytest.approx(5.0)
    leaf_probs = t.leaf_prob[t.feature < 0]
    assert sorted(leaf_probs.tolist()) == [0.0, 1.0]


def test_tree_pure_labels_single_leaf():
    t = cl.train_tree(np.array([[1.0], [2.0]]),
                      np.array([1, 1], dtype=np.uint8))
    assert t.feature.shape == (1,) and t.feature[0] == -1
    assert t.leaf_class[0] == 1


def test_tree_xor_depth_two():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([0, 1, 1, 0], dtype=np.uint8)
    t = cl.train_tree(X, y)
    assert np.array_equal(cl.tree_predict(t, X), y)


def test_tree_empty_input():
    with pytest.raises(EmptyInputError):
        cl.train_tree(np.empty((0, 2)), np.empty(0, dtype=np.uint8))


def test_tree_root_split_matches_exhaustive_oracle():
    rng = np.random.default_rng(7)
    for _ in range(60):
        n = int(rng.integers(4, 25))
        d = int(rng.integers(1, 4))
        X = rng.normal(size=(n, d))
        y = rng.integers(0, 2, size=n).astype(np.uint8)
        if y.min() == y.max():
            continue
        ref = exhaustive_best_split(X, y)
        t = cl.train_tree(X, y, max_depth=1)
        if ref is None:
            assert t.feature[0] == -1
        else:
            assert t.feature[0] == ref[0]
            assert t.threshold[0] == pytest.approx(ref[1], rel=1e-12)


def test_tree_fits_training_data_when_unconstrained():
    rng = np.random.default_rng(8)
    for _ in range(10):
        X = rng.normal(size=(30, 4))
        y = rng.integers(0, 2, size=30).astype(np.uint8)
        t = cl.train_tree(X, y)
        assert np.array_equal(cl.tree_predict(t, X), y)


def test_tree_split_structure_invariant_under_affine_rescale():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(40, 3))
    y = rng.integers(0, 2, size=40).astype(np.uint8)
    scale = np.array([2.0, 0.5, 10.0])
    offset = 3.0
    base = cl.train_tree(X, y)
    scaled = cl.train_tree(X * scale + offset, y)
    np.testing.assert_array_equal(base.feature, scaled.feature)
    np.testing.assert_array_equal(base.left, scaled.left)
    np.testing.assert_array_equal(base.leaf_class, scaled.leaf_class)
    internal = base.feature >= 0
    mapped = base.threshold[internal] * scale[base.feature[internal]] + offset
    np.testing.assert_allclose(scaled.threshold[internal], mapped, rtol=1e-12)


# -- bagged trees ------------------------------------------------------------------

def _blobs(rng, n_per, spread=1.0):
    a = rng.normal(size=(n_per, 2)) * spread + 4.0
    b = rng.normal(size=(n_per, 2)) * spread - 4.0
    X = np.vstack([a, b])
    y = np.array([1] * n_per + [0] * n_per, dtype=np.uint8)
    return X, y


def test_bagged_single_tree_no_bootstrap_reduces_to_tree():
    rng = np.random.default_rng(10)
    X, y = _blobs(rng, 20)
    model = cl.train_bagged_trees(X, y, n_trees=1, seed=0, bootstrap=False)
    plain = cl.train_tree(X, y)
    q = rng.normal(size=(30, 2)) * 4.0
    np.testing.assert_array_equal(cl.bagged_scores(model, q),
                                  cl.tree_predict(plain, q).astype(float))


def test_bagged_blobs_holdout_perfect():
    rng = np.random.default_rng(11)
    X, y = _blobs(rng, 40)
    model = cl.train_bagged_trees(X, y, n_trees=30, seed=5)
    Xt, yt = _blobs(rng, 25)
    pred = (cl.bagged_scores(model, Xt) >= 0.5).astype(np.uint8)
    assert np.array_equal(pred, yt)


def test_bagged_deterministic():
    rng = np.random.default_rng(12)
    X, y = _blobs(rng, 15)
    q = rng.normal(size=(10, 2))
    a = cl.bagged_scores(cl.train_bagged_trees(X, y, n_trees=12, seed=3), q)
    b = cl.bagged_scores(cl.train_bagged_trees(X, y, n_trees=12, seed=3), q)
    np.testing.assert_array_equal(a, b)


def test_bagged_score_permutation_invariant():
    rng = np.random.default_rng(13)
    X, y = _blobs(rng, 15)
    model = cl.train_bagged_trees(X, y, n_trees=9, seed=1)
    q = rng.normal(size=(8, 2))
    base = cl.bagged_scores(model, q)
    model.trees = model.trees[::-1]
    np.testing.assert_array_equal(base, cl.bagged_scores(model, q))


# -- cubic SVM ---------------------------------------------------------------------

def test_svm_two_point_boundary():
    m = cl.train_cubic_svm(np.array([[-1.0], [1.0]]),
                           np.array([0, 1], dtype=np.uint8), tol=1e-5)
    vals = cl.svm_decision_values(m, np.array([[0.0], [-1.0], [1.0]]))
    assert vals[0] == pytest.approx(0.0, abs=1e-9)
    assert vals[1] < 0 < vals[2]


def test_svm_duals_match_dense_qp():
    rng = np.random.default_rng(14)
    for _ in range(25):
        n = int(rng.integers(6, 10))
        X = rng.normal(size=(n, 2))
        y = (np.arange(n) % 2).astype(np.uint8)
        m = cl.train_cubic_svm(X, y, c=1.0, tol=1e-8)
        y_pm = np.where(y > 0, 1.0, -1.0)
        ref = cvxopt_svm_duals(cl.cubic_kernel(X, X), y_pm, 1.0)
        mine = np.zeros(n)
        for sv, coef in zip(m.support_vectors, m.dual_coef):
            i = int(np.where((X == sv).all(axis=1))[0][0])
            mine[i] = coef * y_pm[i]
        assert np.abs(mine - ref).max() < 1e-4
        assert m.kkt_residual <= 1e-8


def test_svm_dual_constraint_holds():
    rng = np.random.default_rng(15)
    X = rng.normal(size=(30, 4))
    y = rng.integers(0, 2, size=30).astype(np.uint8)
    m = cl.train_cubic_svm(X, y, tol=1e-4)
    assert abs(float(m.dual_coef.sum())) < 1e-6
    assert np.all(np.abs(m.dual_coef) <= m.c + 1e-9)


def test_svm_single_class_rejected():
    with pytest.raises(SingleClassError):
        cl.train_cubic_svm(np.ones((4, 2)), np.ones(4, dtype=np.uint8))


def test_svm_budget_warns_and_returns():
    rng = np.random.default_rng(16)
    X = rng.normal(size=(40, 3))
    y = rng.integers(0, 2, size=40).astype(np.uint8)
    with pytest.warns(cl.NoConvergenceWarning):
        m = cl.train_cubic_svm(X, y, tol=1e-10, max_kernel_evals=2000)
    assert m.converged is False
    assert np.isfinite(cl.svm_decision_values(m, X)).all()


# -- KNN --------------------------------------------------------------------------

def test_knn_self_query():
    rng = np.random.default_rng(17)
    stored = rng.normal(size=(20, 3))
    labels = rng.integers(0, 2, size=20).astype(np.uint8)
    label, score = cl.knn_predict(stored, labels, 1, stored[7])
    assert label == labels[7]
    assert score == float(labels[7])


def test_knn_k_equals_n_majority():
    stored = np.arange(10, dtype=np.float64).reshape(-1, 1)
    labels = np.array([1, 1, 1, 1, 1, 1, 0, 0, 0, 0], dtype=np.uint8)
    label, score = cl.knn_predict(stored, labels, 10, np.array([100.0]))
    assert label == 1 and score == 0.6


def test_knn_matches_brute_force():
    rng = np.random.default_rng(18)
    for _ in range(40):
        n = int(rng.integers(5, 25))
        d = int(rng.integers(1, 5))
        k = int(rng.integers(1, n + 1))
        stored = rng.normal(size=(n, d))
        labels = rng.integers(0, 2, size=n).astype(np.uint8)
        q = rng.normal(size=d)
        _, score = cl.knn_predict(stored, labels, k, q)
        assert score == pytest.approx(brute_knn_af_fraction(stored, labels, q, k))


def test_knn_bad_k():
    stored = np.ones((3, 2))
    labels = np.zeros(3, dtype=np.uint8)
    with pytest.raises(BadKError):
        cl.knn_predict(stored, labels, 4, np.ones(2))
    with pytest.raises(BadKError):
        cl.knn_predict(stored, labels, 0, np.ones(2))


# -- subspace KNN -------------------------------------------------------------------

def test_subspace_reduces_to_plain_knn():
    rng = np.random.default_rng(19)
    stored = rng.normal(size=(25, 6))
    labels = rng.integers(0, 2, size=25).astype(np.uint8)
    model = cl.train_subspace_knn(stored, labels, n_learners=1, subspace_dim=6,
                                  k=3, seed=0)
    q = rng.normal(size=(12, 6))
    scores = cl.subspace_scores(model, q)
    for row, s in zip(q, scores):
        label, _ = cl.knn_predict(stored, labels, 3, row)
        assert s == float(label)


def test_subspace_duplicate_row_dominates():
    rng = np.random.default_rng(20)
    stored = rng.normal(size=(15, 8))
    labels = rng.integers(0, 2, size=15).astype(np.uint8)
    model = cl.train_subspace_knn(stored, labels, n_learners=10, subspace_dim=4,
                                  k=1, seed=4)
    scores = cl.subspace_scores(model, stored)
    np.testing.assert_array_equal(scores, labels.astype(float))


def test_subspace_deterministic():
    rng = np.random.default_rng(21)
    stored = rng.normal(size=(20, 7))
    labels = rng.integers(0, 2, size=20).astype(np.uint8)
    q = rng.normal(size=(9, 7))
    a = cl.train_subspace_knn(stored, labels, seed=2, subspace_dim=3)
    b = cl.train_subspace_knn(stored, labels, seed=2, subspace_dim=3)
    np.testing.assert_array_equal(a.subsets, b.subsets)
    np.testing.assert_array_equal(cl.subspace_scores(a, q),
                                  cl.subspace_scores(b, q))


def test_subspace_bad_parameters():
    stored = np.ones((5, 4))
    labels = np.array([0, 1, 0, 1, 0], dtype=np.uint8)
    with pytest.raises(BadSubspaceError):
        cl.train_subspace_knn(stored, labels, subspace_dim=5)
    with pytest.raises(BadSubspaceError):
        cl.train_subspace_knn(stored, labels, n_learners=0, subspace_dim=2)
    with pytest.raises(BadKError):
        cl.train_subspace_knn(stored, labels, subspace_dim=2, k=6)


def test_subspace_subsets_are_distinct_indices():
    rng = np.random.default_rng(22)
    stored = rng.normal(size=(10, 22))
    labels = rng.integers(0, 2, size=10).astype(np.uint8)
    model = cl.train_subspace_knn(stored, labels, n_learners=30,
                                  subspace_dim=11, seed=1)
    for subset in model.subsets:
        assert len(set(subset.tolist())) == 11
        assert subset.min() >= 0 and subset.max() < 22


# -- bundle + serialization -----------------------------------------------------------

@pytest.mark.parametrize("name,params", [
    (cl.MODEL_BAGGED_TREES, {}),
    (cl.MODEL_CUBIC_SVM, {}),
    (cl.MODEL_SUBSPACE_KNN, {"subspace_dim": 2}),
])
def test_model_save_load_round_trip(tmp_path, name, params):
    rng = np.random.default_rng(23)
    X, y = _blobs(rng, 20, spread=2.0)
    tc = cl.train_model(name, params, X, y, seed=6)
    q = rng.normal(size=(15, 2)) * 3.0
    before_scores = cl.decision_scores(tc, q)
    before_labels = cl.predict_labels(tc, q)
    path = tmp_path / f"{name}.json"
    cl.save_model(tc, path, config_hash="deadbeef")
    back = cl.load_model(path)
    np.testing.assert_array_equal(before_scores, cl.decision_scores(back, q))
    np.testing.assert_array_equal(before_labels, cl.predict_labels(back, q))
    assert back.name == name and back.params == tc.params
