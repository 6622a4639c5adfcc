"""Shared fixtures. The reference study (10 replications of the desk-scale
experiment) is expensive, so it runs once per session and every directional
acceptance test reads from the cached summaries."""

import time

import numpy as np
import pytest

from prunelab import analysis, datagen, experiment, pie
from prunelab.presets import (
    REFERENCE_LAYER_SIZES,
    reference_config,
    reference_grid,
    reference_run_seeds,
    reference_train_config,
)

N_REPLICATIONS = 10
N_RAREST = 3


def run_replication(rep, parallel=4):
    ds = datagen.generate(reference_config(seed=rep))
    store, _ = experiment.run_population(
        ds,
        REFERENCE_LAYER_SIZES,
        reference_train_config(),
        reference_grid(),
        reference_run_seeds(rep),
        parallel=parallel,
    )
    return ds, store


def summarize_replication(ds, store):
    ap, _ = analysis.ap_tensor(store)
    curves, _ = analysis.forgettability_curves(ap, store.grid, store.class_names)
    name_to_idx = {n: i for i, n in enumerate(store.class_names)}
    kept = [name_to_idx[c.class_name] for c in curves]

    overall_rows, first_sig = analysis.overall_drop_analysis(ap, store.grid)
    freq_corr = analysis.frequency_correlations(curves, store.train_frequencies[kept])

    counts, _, iou, _ = datagen.realized_stats(ds, "test")
    pairs = analysis.pair_table(
        curves, np.asarray(counts, dtype=float)[kept], iou[np.ix_(kept, kept)]
    )
    reg = analysis.pair_regression(pairs)

    report = pie.build_report(store, k_base=0.0, k_sparse=0.9, fraction=0.05)
    rarest = store.class_names[-N_RAREST:]  # frequencies descend with class index
    ratios = [report.class_ratio[name] for name in rarest]
    if min(ratios) <= 0.0:
        gm_rarest = 0.0
    else:
        gm_rarest = float(np.exp(np.mean(np.log(ratios))))

    return {
        "overall_rows": overall_rows,
        "first_significant_k": first_sig,
        "rho_tail": freq_corr["rho_tail"],
        "rho_first_drop": freq_corr["rho_first_drop"],
        "rho_fcd_iou_quarter": reg["rho_fcd_iou_quarter"],
        "rho_fcd_logfreqdiff": reg["rho_fcd_logfreqdiff"],
        "beta3": float(reg["fit"].coefficients[3]),
        "gm_rarest_class_ratio": gm_rarest,
        "count_ratio_4plus": report.count_ratio["4+"],
        "n_curves": len(curves),
    }


@pytest.fixture(scope="session")
def reference_study(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("reference_study")
    summaries = {}
    digest_parallel = None
    started = time.time()
    for rep in range(1, N_REPLICATIONS + 1):
        ds, store = run_replication(rep, parallel=4)
        summaries[rep] = summarize_replication(ds, store)
        if rep == 1:
            path = tmp / "store_rep1_parallel.bin"
            analysis.save_store(store, path)
            digest_parallel = experiment.file_digest(path)
    return {
        "summaries": summaries,
        "digest_rep1_parallel": digest_parallel,
        "tmp": tmp,
        "elapsed_seconds": time.time() - started,
    }
