"""Population-level pruning-impact analysis.

Everything here consumes a PredictionStore: per-(run, sparsity) predicted
probabilities on the test split, for a population of independently seeded
training runs.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels, metrics, stats
from .container import read_container, write_container
from .pruning import SparsityGrid


@dataclass
class PredictionStore:
    grid: SparsityGrid
    probs: np.ndarray  # R x K x N x C
    labels: np.ndarray  # N x C
    class_names: list
    image_ids: list
    seeds: list = field(default_factory=list)
    failed_seeds: list = field(default_factory=list)
    train_frequencies: np.ndarray = None  # per-class train-split rates
    weight_hist_counts: np.ndarray = None  # aggregated over unpruned models
    weight_hist_edges: np.ndarray = None

    def __post_init__(self):
        r, k, n, c = self.probs.shape
        if k != len(self.grid):
            raise ValueError("probs sparsity axis does not match grid")
        if self.labels.shape != (n, c):
            raise ValueError("labels shape does not match probs")
        if not np.isfinite(self.probs).all() or self.probs.min() < 0 or self.probs.max() > 1:
            raise ValueError("probabilities must be finite and in [0,1]")

    @property
    def runs(self):
        return self.probs.shape[0]


def save_store(store: PredictionStore, path):
    meta = {
        "kind": "prediction-store",
        "version": 1,
        "grid": list(store.grid.ratios),
        "class_names": store.class_names,
        "image_ids": list(store.image_ids),
        "seeds": list(store.seeds),
        "failed_seeds": list(store.failed_seeds),
    }
    arrays = {"probs": store.probs, "labels": store.labels}
    for key in ("train_frequencies", "weight_hist_counts", "weight_hist_edges"):
        val = getattr(store, key)
        if val is not None:
            arrays[key] = np.asarray(val)
    write_container(path, meta, arrays)


def load_store(path) -> PredictionStore:
    meta, arrays = read_container(path)
    if meta.get("kind") != "prediction-store":
        raise ValueError(f"{path}: not a prediction store")
    return PredictionStore(
        SparsityGrid(tuple(meta["grid"])),
        arrays["probs"],
        arrays["labels"],
        meta["class_names"],
        meta["image_ids"],
        meta.get("seeds", []),
        meta.get("failed_seeds", []),
        arrays.get("train_frequencies"),
        arrays.get("weight_hist_counts"),
        arrays.get("weight_hist_edges"),
    )


def ap_tensor(store: PredictionStore):
    """AP per (run, sparsity, class). Returns (R x K x C array, excluded).

    Classes with no test positives have no defined AP; they come back in
    `excluded` (names) and as nan columns in the tensor.
    """
    r, k, n, c = store.probs.shape
    labels = store.labels.astype(np.float64)
    excluded = [store.class_names[j] for j in range(c) if labels[:, j].sum() == 0]
    ap = np.empty((r, k, c))
    for i in range(r):
        for kk in range(k):
            ap[i, kk] = kernels.batch_ap(store.probs[i, kk], labels)
    return ap, excluded


@dataclass
class ForgettabilityCurve:
    class_name: str
    grid: SparsityGrid
    values: np.ndarray  # K reals, values[0] == 0


def forgettability_curves(ap, grid: SparsityGrid, class_names):
    """Per class: median over runs of the relative AP change vs k=0.

    Classes with any zero baseline AP are excluded (relative change is
    undefined there). Returns (curves, excluded_names).
    """
    if grid.ratios[0] != 0.0:
        raise ValueError("grid must start at 0")
    curves, excluded = [], []
    for c, name in enumerate(class_names):
        base = ap[:, 0, c]
        if np.isnan(ap[:, :, c]).any() or np.any(base == 0.0):
            excluded.append(name)
            continue
        rel = (ap[:, :, c] - base[:, None]) / base[:, None]
        values = np.median(rel, axis=0)
        values[0] = 0.0  # exact by construction; guard against -0.0
        curves.append(ForgettabilityCurve(name, grid, values))
    return curves, excluded


def overall_drop_analysis(ap, grid: SparsityGrid, alpha=0.05):
    """Median mean-AP and Welch p-value per sparsity, plus the first knee.

    The Welch test compares the population of per-run mean-AP values at k
    against the k=0 population; the knee is the smallest k with p < alpha
    and a median below baseline.
    """
    if ap.shape[0] < 2:
        raise ValueError("need >= 2 runs for the Welch comparison")
    mean_ap_runs = np.nanmean(ap, axis=2)  # R x K
    baseline = mean_ap_runs[:, 0]
    rows = []
    first_sig = None
    for kk, k in enumerate(grid.ratios):
        sample = mean_ap_runs[:, kk]
        if np.array_equal(sample, baseline):
            p = 1.0
        else:
            p = stats.welch_t_test(baseline, sample).p_value
        med = stats.median(sample)
        rows.append({"k": k, "median_mean_ap": med, "welch_p": p})
        if (
            first_sig is None
            and k > 0
            and p < alpha
            and med < stats.median(baseline)
        ):
            first_sig = k
    return rows, first_sig


def fcd(curve_a: ForgettabilityCurve, curve_b: ForgettabilityCurve):
    """Forgettability-curve dissimilarity: MSE between the two curves."""
    if curve_a.grid.ratios != curve_b.grid.ratios:
        raise ValueError("curves live on different sparsity grids")
    d = curve_a.values - curve_b.values
    return float(np.mean(d * d))


def first_drop_sparsity(curve: ForgettabilityCurve, threshold=0.20):
    """Smallest k > 0 where the curve falls to -threshold or lower."""
    for k, v in zip(curve.grid.ratios[1:], curve.values[1:]):
        if v <= -threshold:
            return k
    return None


def tail_impact(curve: ForgettabilityCurve, k=0.95):
    try:
        idx = curve.grid.index(k)
    except KeyError:
        raise ValueError(
            f"tail impact needs {k} in the grid; grid is {curve.grid.ratios}"
        ) from None
    return float(curve.values[idx])


def frequency_correlations(curves, train_frequencies, drop_threshold=0.20, tail_k=0.95):
    """Spearman of log train frequency vs first-drop sparsity and tail impact.

    Classes whose curve never crosses the drop threshold get first-drop
    value 1.0 (one step past the grid); their count is reported.
    """
    if len(curves) < 5:
        raise ValueError("need >= 5 classes with defined statistics")
    logf = np.log(np.asarray(train_frequencies, dtype=np.float64))
    first = []
    never = 0
    for curve in curves:
        k = first_drop_sparsity(curve, drop_threshold)
        if k is None:
            never += 1
            k = 1.0
        first.append(k)
    tails = [tail_impact(c, tail_k) for c in curves]
    rho_first, p_first = metrics.spearman(logf, first)
    rho_tail, p_tail = metrics.spearman(logf, tails)
    return {
        "rho_first_drop": rho_first,
        "p_first_drop": p_first,
        "rho_tail": rho_tail,
        "p_tail": p_tail,
        "never_dropped": never,
    }


@dataclass
class PairRecord:
    class_a: str
    class_b: str
    fcd: float
    abs_log_freq_diff: float
    iou_quarter: float


def pair_table(curves, test_frequencies, iou_matrix):
    """One record per unordered class pair: FCD, |LogFreqDiff|, IoU^(1/4).

    test_frequencies are test-split positive counts (or rates; only the
    log-difference matters). Zero-frequency classes are skipped.
    """
    if len(curves) < 2:
        raise ValueError("need >= 2 classes")
    f = np.asarray(test_frequencies, dtype=np.float64)
    records = []
    for a in range(len(curves)):
        for b in range(a + 1, len(curves)):
            if f[a] <= 0 or f[b] <= 0:
                continue
            records.append(
                PairRecord(
                    curves[a].class_name,
                    curves[b].class_name,
                    fcd(curves[a], curves[b]),
                    abs(float(np.log(f[a]) - np.log(f[b]))),
                    float(iou_matrix[a, b] ** 0.25),
                )
            )
    return records


def predict_fcd(coeffs, abs_log_freq_diff, iou_quarter):
    b0, b1, b2, b3 = coeffs
    return b0 + b1 * abs_log_freq_diff + b2 * iou_quarter + b3 * abs_log_freq_diff * iou_quarter


def pair_regression(pairs):
    """OLS of FCD on |LogFreqDiff|, IoU^(1/4) and their interaction.

    Also reports the Spearman rho of FCD against each predictor alone.
    """
    if len(pairs) < 5:
        raise ValueError("need >= 5 pairs")
    x1 = np.array([p.abs_log_freq_diff for p in pairs])
    x2 = np.array([p.iou_quarter for p in pairs])
    y = np.array([p.fcd for p in pairs])
    design = np.column_stack([np.ones_like(x1), x1, x2, x1 * x2])
    fit = stats.ols_fit(design, y)
    rho_freq, p_freq = metrics.spearman(x1, y)
    rho_iou, p_iou = metrics.spearman(x2, y)
    return {
        "fit": fit,
        "rho_fcd_logfreqdiff": rho_freq,
        "p_fcd_logfreqdiff": p_freq,
        "rho_fcd_iou_quarter": rho_iou,
        "p_fcd_iou_quarter": p_iou,
    }
