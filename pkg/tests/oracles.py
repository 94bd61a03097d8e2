"""Independent reference implementations used only by the tests."""
from __future__ import annotations

import itertools

import numpy as np


def naive_agglomerate(points, linkage):
    """O(n^3) clustering that recomputes every cluster distance from members.

    Returns a list of (left_id, right_id, height, size) with the same id and
    tie-breaking conventions as the library.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    n = len(P)
    clusters = {i: [i] for i in range(n)}
    merges = []
    next_id = n

    def dist(a, b):
        A, B = P[clusters[a]], P[clusters[b]]
        pair = np.sqrt(((A[:, None, :] - B[None, :, :]) ** 2).sum(-1))
        if linkage == "single":
            return pair.min()
        if linkage == "complete":
            return pair.max()
        if linkage == "average":
            return pair.mean()
        if linkage == "centroid":
            return np.sqrt(((A.mean(0) - B.mean(0)) ** 2).sum())
        if linkage == "ward":
            def ess(M):
                return ((M - M.mean(0)) ** 2).sum()
            return ess(np.vstack([A, B])) - ess(A) - ess(B)
        raise ValueError(linkage)

    while len(clusters) > 1:
        best = None
        for a, b in itertools.combinations(sorted(clusters), 2):
            d = dist(a, b)
            if best is None or d < best[2]:
                best = (a, b, d)
        a, b, d = best
        clusters[next_id] = clusters.pop(a) + clusters.pop(b)
        merges.append((a, b, float(d), len(clusters[next_id])))
        next_id += 1
    return merges


def irls_logit(X, y, iters=200, tol=1e-14):
    """Logit MLE by iteratively reweighted least squares via lstsq."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.zeros(X.shape[1])
    for _ in range(iters):
        eta = X @ beta
        p = 1.0 / (1.0 + np.exp(-eta))
        w = p * (1 - p)
        z = eta + (y - p) / w
        sw = np.sqrt(w)
        new, *_ = np.linalg.lstsq(X * sw[:, None], z * sw, rcond=None)
        if np.max(np.abs(new - beta)) < tol:
            beta = new
            break
        beta = new
    return beta


def quantile_cuts(values, bins):
    """Equal-frequency cut points by sorting and linear interpolation."""
    v = np.sort(np.asarray(values, dtype=float))
    n = len(v)
    cuts = []
    for i in range(1, bins):
        pos = (n - 1) * i / bins
        lo = int(np.floor(pos))
        hi = min(lo + 1, n - 1)
        cuts.append(v[lo] + (pos - lo) * (v[hi] - v[lo]))
    out = sorted(set(c for c in cuts if v[0] < c <= v[-1]))
    return out


def chi2_2xk(table):
    """Pearson chi-square statistic written out cell by cell."""
    T = [[float(c) for c in row] for row in table]
    n = sum(map(sum, T))
    rows = [sum(r) for r in T]
    cols = [sum(T[i][j] for i in range(len(T))) for j in range(len(T[0]))]
    stat = 0.0
    for i, r in enumerate(rows):
        for j, c in enumerate(cols):
            if r and c:
                e = r * c / n
                stat += (T[i][j] - e) ** 2 / e
    return stat
