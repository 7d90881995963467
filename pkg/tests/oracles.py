"""Independent reference implementations used to check the fast paths.

Everything here is deliberately brute force and shares no code with the
package internals.
"""

import numpy as np


def exhaustive_best_split(X, y, min_leaf=1):
    """Enumerate every (feature, midpoint) split and minimize weighted Gini.

    Tie rule mirrors the contract: lowest feature index, then lowest
    threshold. Returns (feature, threshold, score) or None.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    n = X.shape[0]
    best = None
    for f in range(X.shape[1]):
        uniq = np.unique(X[:, f])
        for a, b in zip(uniq[:-1], uniq[1:]):
            thr = (a + b) / 2.0
            left = X[:, f] <= thr
            n_l = int(left.sum())
            n_r = n - n_l
            if n_l < min_leaf or n_r < min_leaf:
                continue
            af_l = int(np.sum(y[left] == 1))
            af_r = int(np.sum(y[~left] == 1))
            naf_l = n_l - af_l
            naf_r = n_r - af_r
            # size-weighted Gini written from integer counts; mathematically
            # equal splits must also compare equal in floating point, or the
            # lowest-threshold tie rule cannot be checked
            score = (n_l - (af_l * af_l + naf_l * naf_l) / n_l
                     + n_r - (af_r * af_r + naf_r * naf_r) / n_r) / n
            if best is None or score < best[2]:
                best = (f, thr, score)
    return best


def brute_knn_af_fraction(train, labels, query, k):
    """Full scan with lexicographic (distance, index) ordering."""
    d2 = np.sum((np.asarray(train) - np.asarray(query)) ** 2, axis=1)
    order = np.lexsort((np.arange(d2.shape[0]), d2))
    return float(np.mean(np.asarray(labels)[order[:k]]))


def cvxopt_svm_duals(K, y_pm, c):
    """Dense QP reference for the SVM dual, solved tightly by cvxopt."""
    import cvxopt
    cvxopt.solvers.options["show_progress"] = False
    cvxopt.solvers.options["abstol"] = 1e-10
    cvxopt.solvers.options["reltol"] = 1e-10
    cvxopt.solvers.options["feastol"] = 1e-10
    n = K.shape[0]
    q = cvxopt.matrix(np.outer(y_pm, y_pm) * K)
    p = cvxopt.matrix(-np.ones(n))
    g = cvxopt.matrix(np.vstack([-np.eye(n), np.eye(n)]))
    h = cvxopt.matrix(np.concatenate([np.zeros(n), c * np.ones(n)]))
    a = cvxopt.matrix(np.asarray(y_pm, dtype=np.float64).reshape(1, -1))
    b = cvxopt.matrix(np.zeros(1))
    sol = cvxopt.solvers.qp(q, p, g, h, a, b)
    return np.array(sol["x"]).ravel()


def butterworth_lowpass_magnitude(f_hz, cutoff_hz, order):
    """Analytic analog Butterworth magnitude."""
    return 1.0 / np.sqrt(1.0 + (f_hz / cutoff_hz) ** (2 * order))


def fft_amplitude(x, fs_hz, f_hz):
    """Single-frequency amplitude via the DFT bin nearest f_hz."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    spec = np.fft.rfft(x * np.hanning(n))
    freqs = np.fft.rfftfreq(n, d=1.0 / fs_hz)
    k = int(np.argmin(np.abs(freqs - f_hz)))
    lo = max(0, k - 2)
    # hann halves the peak bin amplitude; search +/-2 bins for the maximum
    return 2.0 * np.abs(spec[lo:k + 3]).max() / (0.5 * n)
