"""The three classifiers, from scratch: bagged CART trees, a cubic-kernel
SVM trained by sequential minimal optimization, and a random-subspace KNN
ensemble, plus the shared feature standardizer and model serialization.

Per-model preprocessing contract: trees consume raw features; the SVM and
KNN operate on standardized features (the bundle carries the standardizer).
Score ties at the 0.5 vote fraction (or 0 decision value) resolve to AF.
"""

from dataclasses import dataclass
import json
import warnings

import numpy as np

from . import kernels
from .errors import (
    BadKError,
    BadSubspaceError,
    ConfigError,
    EmptyInputError,
    NoConvergenceWarning,
    SingleClassError,
    TooFewRowsError,
)

STD_FLOOR = 1e-12

MODEL_BAGGED_TREES = "bagged_trees"
MODEL_CUBIC_SVM = "cubic_svm"
MODEL_SUBSPACE_KNN = "subspace_knn"

MODEL_DEFAULTS = {
    MODEL_BAGGED_TREES: {"n_trees": 30},
    MODEL_CUBIC_SVM: {"c": 1.0, "tol": 1e-3, "max_kernel_evals": 1_000_000},
    MODEL_SUBSPACE_KNN: {"n_learners": 30, "subspace_dim": 11, "k": 1},
}


# -- standardizer ----------------------------------------------------------------

@dataclass
class Standardizer:
    mean: np.ndarray
    std: np.ndarray  # sample std, floored at STD_FLOOR


def fit_standardizer(rows):
    rows = np.asarray(rows, dtype=np.float64)
    if rows.shape[0] < 2:
        raise TooFewRowsError(f"need >= 2 rows, got {rows.shape[0]}")
    return Standardizer(
        mean=rows.mean(axis=0),
        std=np.maximum(rows.std(axis=0, ddof=1), STD_FLOOR),
    )


def apply_standardizer(st, rows):
    return (np.asarray(rows, dtype=np.float64) - st.mean) / st.std


# -- CART decision tree ----------------------------------------------------------

@dataclass
class DecisionTree:
    """Array-encoded binary tree; feature[i] == -1 marks a leaf.

    Routing: rows with x[feature] <= threshold go left. Leaves carry the
    majority class (ties to AF) and the AF fraction as probability.
    """
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_class: np.ndarray
    leaf_prob: np.ndarray
    max_depth: int
    min_leaf: int


_UNLIMITED_DEPTH = 2 ** 31 - 1


def train_tree(rows, labels, max_depth=None, min_leaf=1, rng=None):
    """Greedy CART on Gini impurity.

    Splits minimize size-weighted Gini over midpoints of consecutive unique
    feature values; ties resolve to the lowest feature index, then the lowest
    threshold. Growth stops on purity, the depth cap, or children smaller
    than min_leaf. The rng argument is accepted for interface stability but
    unused: the tie rules make training deterministic.
    """
    del rng
    X = np.ascontiguousarray(rows, dtype=np.float64)
    y = np.asarray(labels, dtype=np.uint8)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyInputError("need at least one training row")
    depth_cap = _UNLIMITED_DEPTH if max_depth is None else int(max_depth)
    if depth_cap < 0 or min_leaf < 1:
        raise ConfigError("max_depth must be >= 0 and min_leaf >= 1")

    feature, threshold, left, right = [], [], [], []
    leaf_class, leaf_prob = [], []

    def _new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf_class.append(0)
        leaf_prob.append(0.0)
        return len(feature) - 1

    def _build(idx, depth):
        node = _new_node()
        ys = y[idx]
        n = idx.shape[0]
        n_af = int(ys.sum())
        split_ok = False
        if 0 < n_af < n and depth < depth_cap and n >= 2 * min_leaf:
            f, thr, _, split_ok = kernels.best_split(X[idx], ys, min_leaf)
        if split_ok:
            go_left = X[idx, f] <= thr
            feature[node] = int(f)
            threshold[node] = float(thr)
            left[node] = _build(idx[go_left], depth + 1)
            right[node] = _build(idx[~go_left], depth + 1)
        else:
            leaf_class[node] = 1 if 2 * n_af >= n else 0
            leaf_prob[node] = n_af / n
        return node

    _build(np.arange(X.shape[0]), 0)
    return DecisionTree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        leaf_class=np.array(leaf_class, dtype=np.uint8),
        leaf_prob=np.array(leaf_prob, dtype=np.float64),
        max_depth=depth_cap,
        min_leaf=int(min_leaf),
    )


def _tree_leaves(tree, X):
    X = np.asarray(X, dtype=np.float64)
    out = np.empty(X.shape[0], dtype=np.int64)
    for r in range(X.shape[0]):
        node = 0
        while tree.feature[node] >= 0:
            if X[r, tree.feature[node]] <= tree.threshold[node]:
                node = tree.left[node]
            else:
                node = tree.right[node]
        out[r] = node
    return out


def tree_predict(tree, X):
    """Per-row class votes (uint8, 1 = AF)."""
    return tree.leaf_class[_tree_leaves(tree, X)]


def tree_scores(tree, X):
    """Per-row leaf AF fractions."""
    return tree.leaf_prob[_tree_leaves(tree, X)]


# -- bagged trees -----------------------------------------------------------------

@dataclass
class BaggedTreesModel:
    trees: list
    tree_seeds: list
    n_trees: int
    bootstrap: bool


def train_bagged_trees(rows, labels, n_trees=30, seed=0, bootstrap=True):
    """Bootstrap-aggregated fully grown trees (min_leaf 1, unlimited depth).

    Per-tree seeds derive deterministically from the master seed, so training
    order cannot change results. bootstrap=False is a test hook that makes
    every tree see the full sample.
    """
    if n_trees < 1:
        raise ConfigError(f"n_trees must be >= 1, got {n_trees}")
    X = np.asarray(rows, dtype=np.float64)
    y = np.asarray(labels, dtype=np.uint8)
    if X.shape[0] == 0:
        raise EmptyInputError("need at least one training row")
    children = np.random.SeedSequence(seed).spawn(n_trees)
    trees = []
    tree_seeds = []
    for child in children:
        tree_seeds.append(int(child.generate_state(1)[0]))
        rng = np.random.default_rng(child)
        if bootstrap:
            idx = rng.integers(0, X.shape[0], size=X.shape[0])
        else:
            idx = np.arange(X.shape[0])
        trees.append(train_tree(X[idx], y[idx]))
    return BaggedTreesModel(trees=trees, tree_seeds=tree_seeds,
                            n_trees=n_trees, bootstrap=bootstrap)


def bagged_scores(model, X):
    """AF vote fraction across trees, in [0, 1]."""
    votes = np.zeros(np.asarray(X).shape[0])
    for tree in model.trees:
        votes += tree_predict(tree, X)
    return votes / len(model.trees)


# -- cubic SVM via SMO --------------------------------------------------------------

def cubic_kernel(a, b):
    """K(u, v) = (1 + u.v)^3 applied row-wise."""
    return (1.0 + np.asarray(a, dtype=np.float64) @ np.asarray(b, dtype=np.float64).T) ** 3


@dataclass
class CubicSvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i at the support vectors
    bias: float
    c: float
    kkt_residual: float
    converged: bool
    n_steps: int


def train_cubic_svm(rows, labels, c=1.0, tol=1e-3, seed=0,
                    max_kernel_evals=1_000_000):
    """SMO on the dual with the cubic kernel; rows must be standardized.

    Labels encode AF as +1 and NAF as -1. Pair selection follows the
    dual-threshold (maximal violating pair) formulation, which cannot stall
    on a misplaced bias the way the single-threshold heuristic can; the
    solver is deterministic, so the seed argument is accepted only for
    interface stability. Convergence means every KKT violation is within
    tol. The full Gram matrix is cached up front, so the kernel-evaluation
    budget translates into an update-step cap; exhausting it issues a
    NoConvergenceWarning and returns the best iterate.
    """
    del seed
    X = np.ascontiguousarray(rows, dtype=np.float64)
    y01 = np.asarray(labels)
    n = X.shape[0]
    if n == 0:
        raise EmptyInputError("need at least one training row")
    y = np.where(y01 > 0, 1.0, -1.0)
    if np.all(y > 0) or np.all(y < 0):
        raise SingleClassError("both classes are required to train the SVM")
    if c <= 0 or tol <= 0:
        raise ConfigError("c and tol must be positive")

    gram = cubic_kernel(X, X)
    evals_used = n * n
    step_cost = 2 * n  # cached kernel values touched per update
    max_steps = max(1, int(max(0, max_kernel_evals - evals_used) // step_cost))

    alpha = np.zeros(n)
    # bias-free errors F_i = sum_j alpha_j y_j K_ij - y_i; pair updates only
    # ever need differences, so the bias drops out until the very end
    f0 = -y.copy()
    pos = y > 0
    steps = 0

    def pair_step(i1, i2):
        nonlocal steps, f0
        if i1 == i2:
            return False
        a1, a2 = alpha[i1], alpha[i2]
        y1, y2 = y[i1], y[i2]
        s = y1 * y2
        if s > 0:
            lo, hi = max(0.0, a1 + a2 - c), min(c, a1 + a2)
        else:
            lo, hi = max(0.0, a2 - a1), min(c, c + a2 - a1)
        if hi - lo < 1e-12:
            return False
        eta = gram[i1, i1] + gram[i2, i2] - 2.0 * gram[i1, i2]
        if eta <= 0.0:
            return False
        snap = 1e-10 * c
        a2_new = min(max(a2 + y2 * (f0[i1] - f0[i2]) / eta, lo), hi)
        if a2_new < snap:
            a2_new = 0.0
        elif a2_new > c - snap:
            a2_new = c
        if abs(a2_new - a2) < 1e-14 * (a2_new + a2 + 1e-14):
            return False
        a1_new = a1 + s * (a2 - a2_new)
        # roundoff lands a hair off the exact corner; bound-membership tests
        # need exact zeros and c's
        if a1_new < snap:
            a1_new = 0.0
        elif a1_new > c - snap:
            a1_new = c
        f0 += (y1 * (a1_new - a1) * gram[:, i1]
               + y2 * (a2_new - a2) * gram[:, i2])
        alpha[i1] = a1_new
        alpha[i2] = a2_new
        steps += 1
        return True

    budget_hit = False
    while True:
        if steps >= max_steps:
            budget_hit = True
            break
        up = (pos & (alpha < c)) | (~pos & (alpha > 0))
        low = (~pos & (alpha < c)) | (pos & (alpha > 0))
        if not up.any() or not low.any():
            break
        up_idx = np.flatnonzero(up)
        low_idx = np.flatnonzero(low)
        i = int(up_idx[np.argmin(f0[up_idx])])
        j = int(low_idx[np.argmax(f0[low_idx])])
        if f0[j] - f0[i] <= 2.0 * tol:
            break
        if not pair_step(i, j):
            # maximal pair numerically unusable (e.g. duplicate rows); try
            # the next most violating combinations before giving up
            stepped = False
            for jj in low_idx[np.argsort(-f0[low_idx])][:16]:
                for ii in up_idx[np.argsort(f0[up_idx])][:16]:
                    if pair_step(int(ii), int(jj)):
                        stepped = True
                        break
                if stepped:
                    break
            if not stepped:
                break

    up = (pos & (alpha < c)) | (~pos & (alpha > 0))
    low = (~pos & (alpha < c)) | (pos & (alpha > 0))
    if up.any() and low.any():
        bias = -(float(f0[up].min()) + float(f0[low].max())) / 2.0
    elif up.any():
        bias = -float(f0[up].min())
    elif low.any():
        bias = -float(f0[low].max())
    else:
        bias = 0.0

    margins = y * (f0 + y + bias)  # y_i * f(x_i)
    kkt = 0.0
    for i in range(n):
        if alpha[i] < c - 1e-12:
            kkt = max(kkt, 1.0 - margins[i])
        if alpha[i] > 1e-12:
            kkt = max(kkt, margins[i] - 1.0)
    kkt = max(kkt, 0.0)
    converged = kkt <= tol
    if not converged:
        cause = "work budget exhausted" if budget_hit else "no usable pair left"
        warnings.warn(
            f"SMO stopped after {steps} updates ({cause}) with KKT residual "
            f"{kkt:.3g} > tol {tol:g}; returning best iterate",
            NoConvergenceWarning)
    sv = alpha > 0.0
    return CubicSvmModel(
        support_vectors=X[sv].copy(),
        dual_coef=(alpha * y)[sv],
        bias=float(bias),
        c=float(c),
        kkt_residual=float(kkt),
        converged=bool(converged),
        n_steps=steps,
    )


def svm_decision_values(model, X):
    if model.support_vectors.shape[0] == 0:
        return np.full(np.asarray(X).shape[0], model.bias)
    return cubic_kernel(X, model.support_vectors) @ model.dual_coef + model.bias


# -- subspace KNN ------------------------------------------------------------------

def knn_predict(stored, stored_labels, k, query):
    """Plain KNN for a single query: (label, AF fraction among k neighbors).

    Euclidean distance; distance ties resolve to the lower stored-row index;
    vote ties resolve to AF.
    """
    stored = np.ascontiguousarray(stored, dtype=np.float64)
    labels = np.asarray(stored_labels, dtype=np.uint8)
    if not 1 <= k <= stored.shape[0]:
        raise BadKError(f"k must be in [1, {stored.shape[0]}], got {k}")
    q = np.ascontiguousarray(np.asarray(query, dtype=np.float64).reshape(1, -1))
    frac = float(kernels.knn_af_votes(stored, labels, q, k)[0])
    return (1 if frac >= 0.5 else 0), frac


@dataclass
class SubspaceKnnModel:
    subsets: np.ndarray  # (n_learners, subspace_dim) feature indices
    rows: np.ndarray     # standardized training rows
    labels: np.ndarray
    k: int


def train_subspace_knn(rows, labels, n_learners=30, subspace_dim=11, k=1, seed=0):
    """Random-subspace KNN ensemble; rows must be standardized.

    Each learner draws subspace_dim distinct feature indices from its own
    deterministically derived seed and stores the full training set.
    """
    X = np.asarray(rows, dtype=np.float64)
    y = np.asarray(labels, dtype=np.uint8)
    if X.shape[0] == 0:
        raise EmptyInputError("need at least one training row")
    n_features = X.shape[1]
    if n_learners < 1:
        raise BadSubspaceError(f"n_learners must be >= 1, got {n_learners}")
    if not 1 <= subspace_dim <= n_features:
        raise BadSubspaceError(
            f"subspace_dim must be in [1, {n_features}], got {subspace_dim}")
    if not 1 <= k <= X.shape[0]:
        raise BadKError(f"k must be in [1, {X.shape[0]}], got {k}")
    children = np.random.SeedSequence(seed).spawn(n_learners)
    subsets = np.vstack([
        np.sort(np.random.default_rng(child).choice(n_features, subspace_dim,
                                                    replace=False))
        for child in children
    ]).astype(np.int64)
    return SubspaceKnnModel(subsets=subsets, rows=X.copy(), labels=y, k=int(k))


def subspace_scores(model, X):
    """Fraction of learners voting AF, in [0, 1]."""
    X = np.asarray(X, dtype=np.float64)
    votes = np.zeros(X.shape[0])
    for subset in model.subsets:
        frac = kernels.knn_af_votes(
            np.ascontiguousarray(model.rows[:, subset]),
            model.labels,
            np.ascontiguousarray(X[:, subset]),
            model.k,
        )
        votes += frac >= 0.5
    return votes / model.subsets.shape[0]


# -- model bundle and serialization -------------------------------------------------

@dataclass
class TrainedClassifier:
    """A fitted model plus its preprocessing contract and hyperparameters."""
    name: str
    params: dict
    standardizer: Standardizer | None
    model: object


def train_model(name, params, rows, labels, seed):
    if name not in MODEL_DEFAULTS:
        raise ConfigError(f"unknown model {name!r}")
    p = dict(MODEL_DEFAULTS[name])
    p.update(params or {})
    if name == MODEL_BAGGED_TREES:
        model = train_bagged_trees(rows, labels, n_trees=int(p["n_trees"]),
                                   seed=seed)
        st = None
    elif name == MODEL_CUBIC_SVM:
        st = fit_standardizer(rows)
        model = train_cubic_svm(apply_standardizer(st, rows), labels,
                                c=float(p["c"]), tol=float(p["tol"]), seed=seed,
                                max_kernel_evals=int(p["max_kernel_evals"]))
    else:
        st = fit_standardizer(rows)
        model = train_subspace_knn(apply_standardizer(st, rows), labels,
                                   n_learners=int(p["n_learners"]),
                                   subspace_dim=int(p["subspace_dim"]),
                                   k=int(p["k"]), seed=seed)
    return TrainedClassifier(name=name, params=p, standardizer=st, model=model)


def decision_scores(tc, rows):
    """Continuous score per row: vote fraction for the ensembles, decision
    value for the SVM (used for ROC)."""
    if tc.name == MODEL_BAGGED_TREES:
        return bagged_scores(tc.model, rows)
    x = apply_standardizer(tc.standardizer, rows)
    if tc.name == MODEL_CUBIC_SVM:
        return svm_decision_values(tc.model, x)
    return subspace_scores(tc.model, x)


def predict_labels(tc, rows):
    scores = decision_scores(tc, rows)
    cut = 0.0 if tc.name == MODEL_CUBIC_SVM else 0.5
    return (scores >= cut).astype(np.uint8)


MODEL_FORMAT = "afdetect-model"
MODEL_FORMAT_VERSION = 1


def _model_payload(tc):
    m = tc.model
    if tc.name == MODEL_BAGGED_TREES:
        return {
            "bootstrap": m.bootstrap,
            "n_trees": m.n_trees,
            "trees": [{
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "leaf_class": t.leaf_class.tolist(),
                "leaf_prob": t.leaf_prob.tolist(),
                "max_depth": t.max_depth,
                "min_leaf": t.min_leaf,
            } for t in m.trees],
        }
    if tc.name == MODEL_CUBIC_SVM:
        return {
            "support_vectors": m.support_vectors.tolist(),
            "dual_coef": m.dual_coef.tolist(),
            "bias": m.bias,
            "c": m.c,
            "kkt_residual": m.kkt_residual,
            "converged": m.converged,
            "n_steps": m.n_steps,
        }
    return {
        "subsets": m.subsets.tolist(),
        "rows": m.rows.tolist(),
        "labels": m.labels.tolist(),
        "k": m.k,
    }


def _model_from_payload(name, d):
    if name == MODEL_BAGGED_TREES:
        trees = [DecisionTree(
            feature=np.array(t["feature"], dtype=np.int32),
            threshold=np.array(t["threshold"], dtype=np.float64),
            left=np.array(t["left"], dtype=np.int32),
            right=np.array(t["right"], dtype=np.int32),
            leaf_class=np.array(t["leaf_class"], dtype=np.uint8),
            leaf_prob=np.array(t["leaf_prob"], dtype=np.float64),
            max_depth=t["max_depth"],
            min_leaf=t["min_leaf"],
        ) for t in d["trees"]]
        return BaggedTreesModel(trees=trees, tree_seeds=[],
                                n_trees=d["n_trees"], bootstrap=d["bootstrap"])
    if name == MODEL_CUBIC_SVM:
        sv = np.array(d["support_vectors"], dtype=np.float64)
        return CubicSvmModel(
            support_vectors=sv.reshape(len(d["support_vectors"]), -1)
            if sv.size else sv.reshape(0, 0),
            dual_coef=np.array(d["dual_coef"], dtype=np.float64),
            bias=d["bias"], c=d["c"], kkt_residual=d["kkt_residual"],
            converged=d["converged"], n_steps=d["n_steps"],
        )
    return SubspaceKnnModel(
        subsets=np.array(d["subsets"], dtype=np.int64),
        rows=np.array(d["rows"], dtype=np.float64),
        labels=np.array(d["labels"], dtype=np.uint8),
        k=d["k"],
    )


def save_model(tc, path, config_hash=""):
    """Write a self-describing JSON model file; floats survive exactly."""
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "name": tc.name,
        "params": tc.params,
        "config_hash": config_hash,
        "standardizer": None if tc.standardizer is None else {
            "mean": tc.standardizer.mean.tolist(),
            "std": tc.standardizer.std.tolist(),
        },
        "model": _model_payload(tc),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_FORMAT_VERSION:
        raise ConfigError(f"{path}: not a recognized model file")
    st = doc["standardizer"]
    standardizer = None if st is None else Standardizer(
        mean=np.array(st["mean"], dtype=np.float64),
        std=np.array(st["std"], dtype=np.float64),
    )
    return TrainedClassifier(
        name=doc["name"],
        params=doc["params"],
        standardizer=standardizer,
        model=_model_from_payload(doc["name"], doc["model"]),
    )
