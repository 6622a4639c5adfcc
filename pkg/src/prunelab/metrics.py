"""Ranking metrics and correlation coefficients."""

import numpy as np

from . import kernels
from .stats import t_cdf


class UndefinedMetricError(ValueError):
    pass


def _as_scored(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 1 or labels.shape != scores.shape:
        raise ValueError("scores and labels must be equal-length 1-d arrays")
    if scores.size == 0:
        raise ValueError("empty input")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be binary")
    return scores, labels.astype(np.float64)


def average_precision(scores, labels):
    """Non-interpolated AP: mean precision at the rank of each positive.

    Sorting is by descending score with ties broken by ascending original
    index, so the value is deterministic for tied scores.
    """
    scores, labels = _as_scored(scores, labels)
    if labels.sum() == 0:
        raise UndefinedMetricError("AP undefined: no positive labels")
    return float(kernels.ap_ordered(scores, labels))


def mean_ap(per_class):
    """Unweighted mean AP over (scores, labels, name) triples.

    Classes with zero positives are excluded; their names are returned so
    callers can report them. Returns (mean_ap, excluded_names).
    """
    aps = []
    excluded = []
    for scores, labels, name in per_class:
        try:
            aps.append(average_precision(scores, labels))
        except UndefinedMetricError:
            excluded.append(name)
    if not aps:
        raise UndefinedMetricError("mean AP undefined: every class empty")
    return float(np.mean(aps)), excluded


def auroc(scores, labels):
    """Mann-Whitney AUROC with tie correction (0.5 credit per tied pair)."""
    scores, labels = _as_scored(scores, labels)
    p = labels.sum()
    if p == 0 or p == labels.size:
        raise UndefinedMetricError("AUROC undefined: single-class labels")
    return float(kernels.auroc_rank(scores, labels))


def pearson(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 3:
        raise ValueError("need equal-length 1-d arrays with >= 3 points")
    r = kernels._pearson_raw(x, y)
    if np.isnan(r):
        raise UndefinedMetricError("correlation undefined: constant input")
    return float(np.clip(r, -1.0, 1.0))


def rankdata(x):
    """Fractional ranks 1..n; ties get the mean of their rank range."""
    return kernels.fractional_ranks(np.asarray(x, dtype=np.float64))


def spearman(x, y):
    """Spearman rho with a two-sided t-approximation p-value.

    p is computed from t = rho * sqrt((n-2)/(1-rho^2)) against Student t
    with n-2 df; |rho| = 1 reports p = 0. The approximation is weak below
    n = 10 (flagged to callers via docs, not via the return value).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    rho = pearson(rankdata(x), rankdata(y))
    n = x.size
    if abs(rho) >= 1.0:
        return rho, 0.0
    t = rho * np.sqrt((n - 2) / (1.0 - rho * rho))
    p = 2.0 * (1.0 - t_cdf(abs(t), n - 2))
    return rho, float(min(max(p, 0.0), 1.0))
