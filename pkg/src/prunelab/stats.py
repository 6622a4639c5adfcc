"""Statistical kernel: Welch's t, Kruskal-Wallis, OLS inference, CDFs."""

from dataclasses import dataclass

import numpy as np
from scipy import special

from . import kernels


class DegenerateTestError(ValueError):
    pass


class RankDeficientError(ValueError):
    pass


@dataclass(frozen=True)
class TestResult:
    statistic: float
    degrees_of_freedom: float
    p_value: float


@dataclass(frozen=True)
class OlsFit:
    coefficients: np.ndarray
    standard_errors: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    residual_variance: float
    n: int
    p: int


def t_cdf(x, df):
    """Student t CDF via the regularized incomplete beta function."""
    if df <= 0:
        raise ValueError("df must be positive")
    x = float(x)
    if x == 0.0:
        return 0.5
    ib = special.betainc(df / 2.0, 0.5, df / (df + x * x))
    return float(ib / 2.0 if x < 0 else 1.0 - ib / 2.0)


def chi2_cdf(x, df):
    """Chi-square CDF via the regularized lower incomplete gamma function."""
    if df <= 0:
        raise ValueError("df must be positive")
    if x <= 0:
        return 0.0
    return float(special.gammainc(df / 2.0, x / 2.0))


def median(values):
    """Middle order statistic; mean of the two middle values for even n."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("median of empty input")
    return float(np.median(values))


def welch_t_test(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs >= 2 values")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    if va == 0.0 and vb == 0.0:
        raise DegenerateTestError("both samples have zero variance")
    sa = va / a.size
    sb = vb / b.size
    t = (a.mean() - b.mean()) / np.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa**2 / (a.size - 1) + sb**2 / (b.size - 1))
    p = 2.0 * (1.0 - t_cdf(abs(t), df))
    return TestResult(float(t), float(df), float(min(max(p, 0.0), 1.0)))


def kruskal_wallis(groups):
    """H statistic on pooled fractional ranks with tie correction."""
    groups = [np.asarray(g, dtype=np.float64) for g in groups]
    if len(groups) < 2 or any(g.size < 2 for g in groups):
        raise ValueError("need >= 2 groups with >= 2 values each")
    pooled = np.concatenate(groups)
    n = pooled.size
    if np.all(pooled == pooled[0]):
        raise DegenerateTestError("all values identical")
    ranks = kernels.fractional_ranks(pooled)
    h = 0.0
    start = 0
    for g in groups:
        r = ranks[start : start + g.size]
        h += g.size * (r.mean() - (n + 1) / 2.0) ** 2
        start += g.size
    h *= 12.0 / (n * (n + 1))
    _, counts = np.unique(pooled, return_counts=True)
    tie_corr = 1.0 - float(((counts**3 - counts).sum())) / (n**3 - n)
    h /= tie_corr
    df = len(groups) - 1
    p = 1.0 - chi2_cdf(h, df)
    return TestResult(float(h), float(df), float(min(max(p, 0.0), 1.0)))


def ols_fit(design, response):
    """Least squares via QR, with SEs and two-sided t p-values.

    Rejects rank-deficient designs (scaled-pivot tolerance 1e-10), naming
    the dependent columns.
    """
    x = np.asarray(design, dtype=np.float64)
    y = np.asarray(response, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.size:
        raise ValueError("design must be n-by-p with a length-n response")
    n, p = x.shape
    if n <= p:
        raise ValueError("need n > p")
    norms = np.linalg.norm(x, axis=0)
    norms[norms == 0] = 1.0
    q, r = np.linalg.qr(x / norms)
    pivots = np.abs(np.diag(r))
    bad = np.nonzero(pivots < 1e-10 * pivots.max())[0]
    if bad.size:
        raise RankDeficientError(
            f"design is rank deficient; dependent column(s): {bad.tolist()}"
        )
    beta_scaled = np.linalg.solve(r, q.T @ y)
    beta = beta_scaled / norms
    resid = y - x @ beta
    df = n - p
    s2 = float(resid @ resid) / df
    rinv = np.linalg.solve(r, np.eye(p))
    xtx_inv = (rinv @ rinv.T) / np.outer(norms, norms)
    se = np.sqrt(s2 * np.diag(xtx_inv))
    with np.errstate(divide="ignore"):
        tvals = np.where(se > 0, beta / se, np.inf * np.sign(beta))
    pvals = np.array([2.0 * (1.0 - t_cdf(abs(t), df)) if np.isfinite(t) else 0.0 for t in tvals])
    return OlsFit(beta, se, tvals, np.clip(pvals, 0.0, 1.0), s2, n, p)
