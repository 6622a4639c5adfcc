"""Seed-population experiment runner and reproducibility manifest."""

import dataclasses
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import nn
from .analysis import PredictionStore
from .nn import TrainConfig, TrainingDivergedError
from .pruning import SparsityGrid, l1_global_prune

SOFTWARE_VERSION = "0.1.0"

# Conventions that affect numbers; recorded in every manifest.
DECISIONS = {
    "ap_variant": "non-interpolated, score ties by ascending index",
    "log_base": "natural",
    "pie_percentile": "exactly floor(0.05*N) smallest, index tie-break",
    "prunable_set": "layer weight matrices, biases excluded",
    "prune_count": "floor(k*W)",
    "first_drop_never_crossed": "assigned k=1.0",
}

HIST_EDGES = np.logspace(-6.0, 1.0, 71)


def _run_one_seed(args):
    dataset, layer_sizes, cfg_dict, ratios, seed = args
    cfg = TrainConfig(**{**cfg_dict, "seed": seed})
    result = nn.train(dataset, layer_sizes, cfg)
    test = dataset.rows("test")
    x_test = dataset.features[test]
    grid = SparsityGrid(ratios)
    probs = np.empty((len(grid), test.size, dataset.labels.shape[1]))
    for kk, k in enumerate(grid.ratios):
        pruned, _ = l1_global_prune(result.model, k)
        probs[kk] = nn.predict_proba(pruned, x_test)
    hist, _ = nn.weight_magnitude_histogram(result.model, HIST_EDGES)
    return seed, probs, hist


def run_population(dataset, layer_sizes, train_config: TrainConfig, grid: SparsityGrid,
                   seeds, parallel=1):
    """Train one model per seed, sweep the sparsity grid, collect test probs.

    Each seed is independent, so parallel execution is byte-identical to
    serial. Diverged seeds are recorded and their runs omitted from the
    store. Returns (PredictionStore, aggregated weight histogram counts).
    """
    cfg_dict = dataclasses.asdict(train_config)
    cfg_dict.pop("seed")
    jobs = [(dataset, list(layer_sizes), cfg_dict, grid.ratios, s) for s in seeds]

    results = []
    failed = []
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            outcomes = list(pool.map(_run_one_seed_safe, jobs))
    else:
        outcomes = [_run_one_seed_safe(job) for job in jobs]
    for seed, payload in outcomes:
        if payload is None:
            failed.append(seed)
        else:
            results.append((seed,) + payload)

    if not results:
        raise RuntimeError("every seed run failed")
    results.sort(key=lambda r: seeds.index(r[0]))
    probs = np.stack([r[1] for r in results])  # R x K x N x C
    hist_total = np.sum([r[2] for r in results], axis=0)
    test = dataset.rows("test")
    store = PredictionStore(
        grid=grid,
        probs=probs,
        labels=dataset.labels[test].copy(),
        class_names=list(dataset.class_names),
        image_ids=[int(i) for i in test],
        seeds=[r[0] for r in results],
        failed_seeds=failed,
        train_frequencies=dataset.labels[dataset.rows("train")].mean(axis=0),
        weight_hist_counts=hist_total,
        weight_hist_edges=HIST_EDGES,
    )
    return store, hist_total


def _run_one_seed_safe(args):
    seed = args[-1]
    try:
        s, probs, hist = _run_one_seed(args)
        return s, (probs, hist)
    except TrainingDivergedError:
        return seed, None


def config_hash(obj):
    def default(o):
        if isinstance(o, np.ndarray):
            return o.tolist()
        if dataclasses.is_dataclass(o):
            return dataclasses.asdict(o)
        raise TypeError(type(o))

    blob = json.dumps(obj, sort_keys=True, default=default).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(path, config_hashes, seeds, outputs):
    manifest = {
        "software_version": SOFTWARE_VERSION,
        "config_hashes": config_hashes,
        "seeds": list(seeds),
        "decisions": DECISIONS,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "outputs": {name: file_digest(p) for name, p in outputs.items()},
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
