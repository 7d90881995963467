"""Numba-jitted hot kernels.

Loop-level mirrors of kernels._numpy with identical contracts; compiled
lazily on first call, cached on disk across processes.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def lfilter(b, a, x, zi):
    nb = b.shape[0]
    ns = nb - 1
    y = np.empty_like(x)
    if ns == 0:
        for m in range(x.shape[0]):
            y[m] = b[0] * x[m]
        return y, zi.copy()
    z = zi.copy()
    for m in range(x.shape[0]):
        xm = x[m]
        ym = b[0] * xm + z[0]
        for i in range(ns - 1):
            z[i] = b[i + 1] * xm + z[i + 1] - a[i + 1] * ym
        z[ns - 1] = b[ns] * xm - a[ns] * ym
        y[m] = ym
    return y, z


@njit(cache=True)
def dwt_periodic(x, lo, hi):
    n = x.shape[0]
    taps = lo.shape[0]
    half = n // 2
    approx = np.empty(half, dtype=np.float64)
    detail = np.empty(half, dtype=np.float64)
    for k in range(half):
        sa = 0.0
        sd = 0.0
        base = 2 * k
        for m in range(taps):
            v = x[(base + m) % n]
            sa += lo[m] * v
            sd += hi[m] * v
        approx[k] = sa
        detail[k] = sd
    return approx, detail


@njit(cache=True)
def idwt_periodic(approx, detail, lo, hi):
    half = approx.shape[0]
    n = 2 * half
    taps = lo.shape[0]
    x = np.zeros(n, dtype=np.float64)
    for k in range(half):
        base = 2 * k
        a = approx[k]
        d = detail[k]
        for m in range(taps):
            x[(base + m) % n] += a * lo[m] + d * hi[m]
    return x


@njit(cache=True)
def best_split(X, y, min_leaf):
    n, n_feat = X.shape
    total_af = 0
    for i in range(n):
        total_af += y[i]
    best_feat = -1
    best_thr = 0.0
    best_score = np.inf
    for f in range(n_feat):
        col = X[:, f].copy()
        order = np.argsort(col, kind="mergesort")
        af = 0
        for i in range(1, n):
            af += y[order[i - 1]]
            lo_v = col[order[i - 1]]
            hi_v = col[order[i]]
            if hi_v <= lo_v:
                continue
            if i < min_leaf or n - i < min_leaf:
                continue
            n_l = float(i)
            n_r = float(n - i)
            af_l = float(af)
            naf_l = n_l - af_l
            af_r = float(total_af - af)
            naf_r = n_r - af_r
            score = (n_l - (af_l * af_l + naf_l * naf_l) / n_l
                     + n_r - (af_r * af_r + naf_r * naf_r) / n_r) / n
            if score < best_score:
                best_score = score
                best_feat = f
                best_thr = (lo_v + hi_v) / 2.0
    return best_feat, best_thr, best_score, best_feat >= 0


@njit(cache=True)
def knn_af_votes(train, labels, queries, k):
    n = train.shape[0]
    d = train.shape[1]
    nq = queries.shape[0]
    votes = np.empty(nq, dtype=np.float64)
    best_d = np.empty(k, dtype=np.float64)
    best_i = np.empty(k, dtype=np.int64)
    for q in range(nq):
        filled = 0
        for j in range(n):
            dist = 0.0
            for c in range(d):
                diff = queries[q, c] - train[j, c]
                dist += diff * diff
            if filled < k:
                pos = filled
                filled += 1
            elif (dist < best_d[k - 1]
                  or (dist == best_d[k - 1] and j < best_i[k - 1])):
                pos = k - 1
            else:
                continue
            # insertion keeping (distance, index) lexicographic order
            while pos > 0 and (dist < best_d[pos - 1]
                               or (dist == best_d[pos - 1] and j < best_i[pos - 1])):
                best_d[pos] = best_d[pos - 1]
                best_i[pos] = best_i[pos - 1]
                pos -= 1
            best_d[pos] = dist
            best_i[pos] = j
        s = 0.0
        for m in range(k):
            s += labels[best_i[m]]
        votes[q] = s / k
    return votes
