"""Pure-numpy implementations of the hot kernels.

Same contracts as the numba backend; used when numba is unavailable or
AFDETECT_PURE_NUMPY=1 is set. The IIR recursion cannot be vectorized, so
`lfilter` falls back to a Python loop and is the slow path here.
"""

import numpy as np


def lfilter(b, a, x, zi):
    """Direct-form II transposed IIR filter, single pass.

    b and a must have equal length with a[0] == 1; zi is the initial state
    of length len(b) - 1. Returns (y, final_state).
    """
    nb = b.shape[0]
    ns = nb - 1
    y = np.empty_like(x)
    if ns == 0:
        y[:] = b[0] * x
        return y, zi.copy()
    bl = [float(v) for v in b]
    al = [float(v) for v in a]
    z = [float(v) for v in zi]
    for m in range(x.shape[0]):
        xm = float(x[m])
        ym = bl[0] * xm + z[0]
        for i in range(ns - 1):
            z[i] = bl[i + 1] * xm + z[i + 1] - al[i + 1] * ym
        z[ns - 1] = bl[ns] * xm - al[ns] * ym
        y[m] = ym
    return y, np.array(z, dtype=np.float64)


def dwt_periodic(x, lo, hi):
    """One analysis level of the periodized orthogonal wavelet transform.

    x must have even length. Output coefficient k correlates the filters
    with x starting at sample 2k, indices wrapping modulo len(x).
    """
    n = x.shape[0]
    taps = lo.shape[0]
    half = n // 2
    idx = (2 * np.arange(half)[:, None] + np.arange(taps)[None, :]) % n
    windows = x[idx]
    return windows @ lo, windows @ hi


def idwt_periodic(approx, detail, lo, hi):
    """Inverse of dwt_periodic (exact, by orthonormality of the basis)."""
    half = approx.shape[0]
    n = 2 * half
    taps = lo.shape[0]
    x = np.zeros(n, dtype=np.float64)
    base = 2 * np.arange(half)
    # positions (2k + m) mod n are distinct across k for fixed m
    for m in range(taps):
        pos = (base + m) % n
        x[pos] += approx * lo[m] + detail * hi[m]
    return x


def best_split(X, y, min_leaf):
    """Best (feature, threshold) under weighted Gini over unique-value midpoints.

    y is uint8 with 1 for the positive class. Ties resolve to the lowest
    feature index, then the lowest threshold. Returns
    (feature, threshold, score, found); feature is -1 when no valid split exists.
    """
    n, n_feat = X.shape
    total_af = int(y.sum())
    best_feat = -1
    best_thr = 0.0
    best_score = np.inf
    pos = np.arange(1, n, dtype=np.float64)
    for f in range(n_feat):
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        prefix_af = np.cumsum(y[order].astype(np.int64))[:-1].astype(np.float64)
        valid = xs[1:] > xs[:-1]
        if min_leaf > 1:
            valid &= (pos >= min_leaf) & (n - pos >= min_leaf)
        if not valid.any():
            continue
        n_l = pos
        n_r = n - pos
        af_l = prefix_af
        naf_l = n_l - af_l
        af_r = total_af - af_l
        naf_r = n_r - af_r
        score = (n_l - (af_l * af_l + naf_l * naf_l) / n_l
                 + n_r - (af_r * af_r + naf_r * naf_r) / n_r) / n
        score = np.where(valid, score, np.inf)
        j = int(np.argmin(score))
        if score[j] < best_score:
            best_score = float(score[j])
            best_feat = f
            best_thr = float((xs[j] + xs[j + 1]) / 2.0)
    return best_feat, best_thr, best_score, best_feat >= 0


def knn_af_votes(train, labels, queries, k):
    """Fraction of positive labels among the k nearest training rows per query.

    Euclidean distance; equal distances resolve to the lower stored-row index.
    """
    d2 = ((queries[:, None, :] - train[None, :, :]) ** 2).sum(axis=-1)
    order = np.argsort(d2, axis=1, kind="stable")
    top = order[:, :k]
    return labels[top].astype(np.float64).mean(axis=1)
