"""Pruning-identified exemplars: detection and characterization."""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .analysis import PredictionStore


@dataclass
class PieReport:
    agreement: np.ndarray  # N Spearman rhos in [-1, 1] (0 for degenerate rows)
    pie_flags: np.ndarray  # N bools
    threshold_rho: float
    class_ratio: dict  # class name -> prevalence ratio PIE / non-PIE
    count_ratio: dict  # "0","1","2","3","4+" -> frequency ratio
    degenerate_count: int = 0
    distinct_agreement_values: int = 0
    infinite_ratio_classes: list = field(default_factory=list)


def mean_predictions(store: PredictionStore, k):
    """Average predicted probabilities over the run population at sparsity k."""
    return store.probs[:, store.grid.index(k)].mean(axis=0)


def per_image_agreement(store: PredictionStore, k_base=0.0, k_sparse=0.9):
    """Per-image Spearman rho between mean base and mean sparse predictions.

    The correlation runs across the C class scores of each image. Images
    whose prediction vector is constant on either side get agreement 0 and
    are counted as degenerate (keeps N stable across configurations).
    """
    if store.labels.shape[1] < 3:
        raise ValueError("need >= 3 classes for a rank correlation")
    base = mean_predictions(store, k_base)
    sparse = mean_predictions(store, k_sparse)
    rho = kernels.rowwise_spearman(base, sparse)
    degenerate = np.isnan(rho)
    rho = np.where(degenerate, 0.0, rho)
    return rho, int(degenerate.sum())


def flag_pies(agreement, fraction=0.05):
    """Flag exactly floor(fraction*N) lowest-agreement images.

    Boundary ties break by ascending image index. Returns
    (flags, threshold_rho, uniform_tie_warning).
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0,1)")
    agreement = np.asarray(agreement, dtype=np.float64)
    n = agreement.size
    m = int(np.floor(fraction * n))
    if m < 1:
        raise ValueError(f"fraction {fraction} flags nothing at N={n}")
    order = np.argsort(agreement, kind="stable")
    flags = np.zeros(n, dtype=bool)
    flags[order[:m]] = True
    threshold = float(agreement[order[m - 1]])
    uniform_tie = bool(np.all(agreement == agreement[0]))
    return flags, threshold, uniform_tie


def _bucket_counts(counts):
    buckets = np.minimum(counts, 4)
    return {("4+" if d == 4 else str(d)): float(np.mean(buckets == d)) for d in range(5)}


def characterize(flags, labels, class_names):
    """Prevalence ratios (PIE vs non-PIE) per class and per disease count.

    A zero denominator yields inf and the class is listed so callers can
    report raw counts instead of a ratio.
    """
    flags = np.asarray(flags, dtype=bool)
    labels = np.asarray(labels)
    if flags.sum() == 0 or (~flags).sum() == 0:
        raise ValueError("both the PIE and non-PIE group must be nonempty")
    pie_prev = labels[flags].mean(axis=0)
    non_prev = labels[~flags].mean(axis=0)
    class_ratio = {}
    infinite = []
    for name, a, b in zip(class_names, pie_prev, non_prev):
        if b == 0.0:
            class_ratio[name] = float("inf") if a > 0 else 0.0
            if a > 0:
                infinite.append(name)
        else:
            class_ratio[name] = float(a / b)

    pie_buckets = _bucket_counts(labels[flags].sum(axis=1))
    non_buckets = _bucket_counts(labels[~flags].sum(axis=1))
    count_ratio = {}
    for key in pie_buckets:
        if non_buckets[key] == 0.0:
            count_ratio[key] = float("inf") if pie_buckets[key] > 0 else 0.0
        else:
            count_ratio[key] = pie_buckets[key] / non_buckets[key]
    return class_ratio, count_ratio, infinite


def build_report(store: PredictionStore, k_base=0.0, k_sparse=0.9, fraction=0.05) -> PieReport:
    agreement, degenerate = per_image_agreement(store, k_base, k_sparse)
    flags, threshold, _ = flag_pies(agreement, fraction)
    class_ratio, count_ratio, infinite = characterize(flags, store.labels, store.class_names)
    return PieReport(
        agreement=agreement,
        pie_flags=flags,
        threshold_rho=threshold,
        class_ratio=class_ratio,
        count_ratio=count_ratio,
        degenerate_count=degenerate,
        distinct_agreement_values=int(np.unique(agreement).size),
        infinite_ratio_classes=infinite,
    )
