"""Synthetic long-tailed multi-label dataset generation and file I/O.

Labels come from a latent-Gaussian threshold model: each class owns a unit
direction in latent space, pairwise cosine similarity equals the requested
co-occurrence coupling, and a sample is positive for a class when its
latent projection clears the class's (1 - frequency) quantile. Thresholds
are the empirical per-split quantiles, so realized frequencies match the
targets to within one sample even for very rare classes.
"""

from dataclasses import dataclass, field

import numpy as np

SPLITS = ("train", "val", "test")
HEADER_PREFIX = "#prunelab-dataset v1"


class GenerationError(ValueError):
    pass


class DatasetParseError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorConfig:
    num_classes: int
    target_frequencies: tuple
    cooccurrence_coupling: np.ndarray
    latent_dim: int
    feature_dim: int
    n_train: int
    n_val: int
    n_test: int
    noise_std: float = 0.1
    seed: int = 0
    include_no_finding: bool = False

    def validate(self):
        c = self.num_classes
        if c < 1 or self.latent_dim < 1 or self.feature_dim < 1:
            raise GenerationError("num_classes, latent_dim, feature_dim must be positive")
        if min(self.n_train, self.n_val, self.n_test) < 1:
            raise GenerationError("every split must be nonempty")
        if self.noise_std < 0:
            raise GenerationError("noise_std must be nonnegative")
        freqs = np.asarray(self.target_frequencies, dtype=np.float64)
        if freqs.shape != (c,):
            raise GenerationError("target_frequencies must have one entry per class")
        if np.any(freqs <= 0.0) or np.any(freqs >= 1.0):
            bad = int(np.argmax((freqs <= 0.0) | (freqs >= 1.0)))
            raise GenerationError(
                f"infeasible target frequency {freqs[bad]} for class {bad}: must lie in (0,1)"
            )
        m = np.asarray(self.cooccurrence_coupling, dtype=np.float64)
        if m.shape != (c, c):
            raise GenerationError("coupling matrix must be C-by-C")
        if not np.allclose(m, m.T, atol=1e-12):
            raise GenerationError("coupling matrix must be symmetric")
        if not np.allclose(np.diag(m), 1.0, atol=1e-12):
            raise GenerationError("coupling diagonal must be exactly 1")
        if m.min() < 0.0 or m.max() > 1.0:
            raise GenerationError("coupling entries must lie in [0,1]")
        if self.latent_dim < c:
            raise GenerationError("latent_dim must be >= num_classes to embed class directions")


@dataclass
class LabeledDataset:
    features: np.ndarray  # N x D float64
    labels: np.ndarray  # N x C int8 in {0,1}
    split: np.ndarray  # N strings in {train, val, test}
    class_names: list = field(default_factory=list)

    def rows(self, split):
        if split not in SPLITS:
            raise ValueError(f"unknown split {split!r}")
        return np.nonzero(self.split == split)[0]

    def equals(self, other):
        return (
            np.array_equal(self.features, other.features)
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.split, other.split)
            and self.class_names == other.class_names
        )


def _class_directions(coupling, latent_dim):
    """Unit vectors whose Gram matrix equals the coupling matrix."""
    w, q = np.linalg.eigh(np.asarray(coupling, dtype=np.float64))
    if w.min() < -1e-8:
        raise GenerationError(
            f"coupling matrix is not positive semidefinite (eigenvalue {w.min():.3e})"
        )
    w = np.clip(w, 0.0, None)
    v = q * np.sqrt(w)  # C x C, rows have Gram = coupling
    c = v.shape[0]
    full = np.zeros((c, latent_dim))
    full[:, :c] = v
    norms = np.linalg.norm(full, axis=1)
    return full / norms[:, None]


def generate(config: GeneratorConfig) -> LabeledDataset:
    config.validate()
    rng = np.random.default_rng(config.seed)
    c = config.num_classes
    freqs = np.asarray(config.target_frequencies, dtype=np.float64)
    dirs = _class_directions(config.cooccurrence_coupling, config.latent_dim)

    n_total = config.n_train + config.n_val + config.n_test
    mixing = rng.standard_normal((config.feature_dim, config.latent_dim)) / np.sqrt(
        config.latent_dim
    )
    latent = rng.standard_normal((n_total, config.latent_dim))
    noise = rng.standard_normal((n_total, config.feature_dim))

    features = latent @ mixing.T + config.noise_std * noise
    scores = latent @ dirs.T  # N x C, each column standard normal

    split = np.array(
        ["train"] * config.n_train + ["val"] * config.n_val + ["test"] * config.n_test
    )
    labels = np.zeros((n_total, c), dtype=np.int8)
    for tag in SPLITS:
        idx = np.nonzero(split == tag)[0]
        for j in range(c):
            m = int(round(freqs[j] * idx.size))
            if m == 0 and tag == "train":
                raise GenerationError(
                    f"target frequency {freqs[j]} for class {j} yields zero train "
                    f"positives at n_train={idx.size}"
                )
            if m > 0:
                # top-m scores within the split; argsort on -score keeps the
                # lowest-index sample on ties
                top = idx[np.argsort(-scores[idx, j], kind="stable")[:m]]
                labels[top, j] = 1

    class_names = [f"class{j:02d}" for j in range(c)]
    if config.include_no_finding:
        nf = (labels.sum(axis=1) == 0).astype(np.int8)
        labels = np.concatenate([labels, nf[:, None]], axis=1)
        class_names.append("no_finding")

    ds = LabeledDataset(features, labels, split, class_names)
    _check_realized(ds, freqs)
    return ds


def _check_realized(ds, target_freqs, rel_tol=0.15):
    idx = ds.rows("train")
    realized = ds.labels[idx, : target_freqs.size].mean(axis=0)
    rel = np.abs(realized - target_freqs) / target_freqs
    if rel.max() > rel_tol:
        j = int(np.argmax(rel))
        raise GenerationError(
            f"realized train frequency {realized[j]:.5f} for class {j} misses "
            f"target {target_freqs[j]:.5f} by more than {rel_tol:.0%}"
        )


def realized_stats(ds: LabeledDataset, split: str):
    """Per-class counts and frequencies plus the pairwise IoU matrix.

    Returns (counts, freqs, iou, degenerate) where degenerate marks pairs
    whose union is empty (IoU recorded as 0).
    """
    idx = ds.rows(split)
    if idx.size == 0:
        raise ValueError(f"split {split!r} is empty")
    y = ds.labels[idx].astype(np.float64)
    counts = y.sum(axis=0)
    freqs = counts / idx.size
    inter = y.T @ y
    union = counts[:, None] + counts[None, :] - inter
    degenerate = union == 0
    iou = np.where(degenerate, 0.0, inter / np.where(degenerate, 1.0, union))
    return counts.astype(int), freqs, iou, degenerate


def save_dataset(ds: LabeledDataset, path):
    n, c = ds.labels.shape
    d = ds.features.shape[1]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{HEADER_PREFIX}, C={c}, D={d}\n")
        fh.write(",".join(ds.class_names) + "\n")
        for i in range(n):
            ys = ",".join(str(int(v)) for v in ds.labels[i])
            xs = ",".join(repr(float(v)) for v in ds.features[i])
            fh.write(f"{ds.split[i]},{ys},{xs}\n")


def load_dataset(path) -> LabeledDataset:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if not lines or not lines[0].startswith(HEADER_PREFIX):
        raise DatasetParseError("line 1: missing header")
    try:
        parts = dict(p.strip().split("=") for p in lines[0].split(",")[1:])
        c = int(parts["C"])
        d = int(parts["D"])
    except (ValueError, KeyError) as exc:
        raise DatasetParseError(f"line 1: malformed header ({exc})") from exc
    if len(lines) < 2 or not lines[1]:
        raise DatasetParseError("line 2: missing class-name line")
    class_names = lines[1].split(",")
    if len(class_names) != c:
        raise DatasetParseError(f"line 2: expected {c} class names, got {len(class_names)}")

    feats, labels, split = [], [], []
    for ln, line in enumerate(lines[2:], start=3):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != 1 + c + d:
            raise DatasetParseError(f"line {ln}: expected {1 + c + d} fields, got {len(cells)}")
        tag = cells[0]
        if tag not in SPLITS:
            raise DatasetParseError(f"line {ln}: unknown split tag {tag!r}")
        row_y = []
        for j, cell in enumerate(cells[1 : 1 + c]):
            if cell not in ("0", "1"):
                raise DatasetParseError(f"line {ln}: non-binary label {cell!r} in column {j}")
            row_y.append(int(cell))
        try:
            row_x = [float(cell) for cell in cells[1 + c :]]
        except ValueError as exc:
            raise DatasetParseError(f"line {ln}: bad feature value ({exc})") from exc
        split.append(tag)
        labels.append(row_y)
        feats.append(row_x)
    if not feats:
        raise DatasetParseError("no data rows")
    return LabeledDataset(
        np.array(feats, dtype=np.float64),
        np.array(labels, dtype=np.int8),
        np.array(split),
        class_names,
    )
