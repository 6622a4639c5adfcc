"""Hot numeric kernels, numba-jitted when available.

Every kernel is written as plain numpy code that is valid Python with or
without numba. Set PRUNELAB_NO_NUMBA=1 to force the pure-numpy path (used
by the fallback tests and the benchmark harness).
"""

import os

import numpy as np

USE_NUMBA = os.environ.get("PRUNELAB_NO_NUMBA", "0").lower() not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        from numba import njit, prange
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

if not USE_NUMBA:
    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap

    prange = range


@njit(cache=True)
def fractional_ranks(x):
    """Ranks 1..n, ties averaged over their rank range."""
    n = x.shape[0]
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(n, dtype=np.float64)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and x[order[j + 1]] == x[order[i]]:
            j += 1
        avg = 0.5 * (i + j) + 1.0
        for t in range(i, j + 1):
            ranks[order[t]] = avg
        i = j + 1
    return ranks


@njit(cache=True)
def ap_ordered(scores, labels):
    """Non-interpolated AP; score ties broken by ascending original index."""
    order = np.argsort(-scores, kind="mergesort")
    hits = 0.0
    total = 0.0
    for r in range(order.shape[0]):
        if labels[order[r]] > 0:
            hits += 1.0
            total += hits / (r + 1.0)
    if hits == 0.0:
        return np.nan
    return total / hits


@njit(cache=True, parallel=True)
def batch_ap(scores, labels):
    """AP per column of an n-by-m score/label pair; nan for empty columns."""
    m = scores.shape[1]
    out = np.empty(m, dtype=np.float64)
    for c in prange(m):
        out[c] = ap_ordered(scores[:, c].copy(), labels[:, c].copy())
    return out


@njit(cache=True)
def auroc_rank(scores, labels):
    """Tie-aware Mann-Whitney AUROC; nan if labels are single-class."""
    ranks = fractional_ranks(scores)
    pos = 0.0
    rank_sum = 0.0
    for i in range(scores.shape[0]):
        if labels[i] > 0:
            pos += 1.0
            rank_sum += ranks[i]
    neg = scores.shape[0] - pos
    if pos == 0.0 or neg == 0.0:
        return np.nan
    u = rank_sum - pos * (pos + 1.0) / 2.0
    return u / (pos * neg)


@njit(cache=True)
def _pearson_raw(x, y):
    n = x.shape[0]
    mx = np.mean(x)
    my = np.mean(y)
    sxy = 0.0
    sxx = 0.0
    syy = 0.0
    for i in range(n):
        dx = x[i] - mx
        dy = y[i] - my
        sxy += dx * dy
        sxx += dx * dx
        syy += dy * dy
    if sxx == 0.0 or syy == 0.0:
        return np.nan
    return sxy / np.sqrt(sxx * syy)


@njit(cache=True, parallel=True)
def rowwise_spearman(a, b):
    """Spearman rho across columns, per row. Constant rows yield nan."""
    n = a.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in prange(n):
        ra = fractional_ranks(a[i].copy())
        rb = fractional_ranks(b[i].copy())
        out[i] = _pearson_raw(ra, rb)
    return out


@njit(cache=True)
def adam_step(param, grad, m, v, step, lr, beta1, beta2, eps):
    """In-place fused Adam update on flat views."""
    bc1 = 1.0 - beta1 ** step
    bc2 = 1.0 - beta2 ** step
    for i in range(param.shape[0]):
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i]
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i]
        param[i] -= lr * (m[i] / bc1) / (np.sqrt(v[i] / bc2) + eps)
