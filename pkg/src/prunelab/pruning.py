"""Global unstructured L1 magnitude pruning and sparsity-grid sweeps."""

from dataclasses import dataclass

import numpy as np

from .container import read_container, write_container
from .nn import MlpModel


@dataclass(frozen=True)
class SparsityGrid:
    ratios: tuple

    def __post_init__(self):
        r = tuple(float(v) for v in self.ratios)
        if not r or r[0] != 0.0:
            raise ValueError("grid must start at 0")
        if any(b <= a for a, b in zip(r, r[1:])):
            raise ValueError("grid must be strictly increasing")
        if r[-1] >= 1.0:
            raise ValueError("grid ratios must lie in [0,1)")
        object.__setattr__(self, "ratios", r)

    def __len__(self):
        return len(self.ratios)

    def index(self, k):
        for i, v in enumerate(self.ratios):
            if abs(v - k) < 1e-12:
                return i
        raise KeyError(f"sparsity {k} not in grid {self.ratios}")


def paper_grid(step=0.05, stop=0.95):
    """The default sweep: 0, step, ..., stop inclusive."""
    n = int(round(stop / step))
    return SparsityGrid(tuple(round(i * step, 10) for i in range(n + 1)))


@dataclass
class PruneMask:
    masks: list  # one binary array per prunable tensor
    requested_sparsity: float
    achieved_sparsity: float


def l1_global_prune(model: MlpModel, k: float):
    """Zero the floor(k*W) smallest-magnitude weights, pooled over layers.

    Ties at the threshold magnitude break by (layer, row, column) ascending,
    so the zero count is exact and zero-sets nest across increasing k. The
    input model is left untouched.
    """
    if not 0.0 <= k < 1.0:
        raise ValueError(f"sparsity ratio must lie in [0,1), got {k}")
    tensors = model.prunable_weights()
    flat = np.concatenate([w.reshape(-1) for w in tensors])
    total = flat.size
    m = int(np.floor(k * total))
    # stable sort on magnitude keeps flat (layer, row, col) order for ties
    zero_idx = np.argsort(np.abs(flat), kind="stable")[:m]
    keep = np.ones(total, dtype=bool)
    keep[zero_idx] = False

    pruned = model.copy()
    masks = []
    start = 0
    for w in pruned.weights:
        mask = keep[start : start + w.size].reshape(w.shape)
        w *= mask
        masks.append(mask.astype(np.int8))
        start += w.size
    return pruned, PruneMask(masks, float(k), m / total)


def sweep(model: MlpModel, grid: SparsityGrid):
    """One-shot prunes of the *original* model at every grid ratio."""
    return [(k,) + l1_global_prune(model, k) for k in grid.ratios]


def save_mask(mask: PruneMask, path):
    meta = {
        "kind": "prune-mask",
        "version": 1,
        "requested_sparsity": mask.requested_sparsity,
        "achieved_sparsity": mask.achieved_sparsity,
    }
    arrays = {f"m{i:02d}": m for i, m in enumerate(mask.masks)}
    write_container(path, meta, arrays)


def load_mask(path) -> PruneMask:
    meta, arrays = read_container(path)
    if meta.get("kind") != "prune-mask":
        raise ValueError(f"{path}: not a prune mask")
    masks = [arrays[key] for key in sorted(arrays)]
    return PruneMask(masks, meta["requested_sparsity"], meta["achieved_sparsity"])
