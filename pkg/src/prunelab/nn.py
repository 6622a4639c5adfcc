"""Dense feed-forward multi-label classifier trained from scratch.

ReLU hidden layers, per-class sigmoid outputs, numerically stable BCE on
logits, Adam, and early stopping on mean per-class validation AUROC.
"""

import copy
from dataclasses import dataclass, field

import numpy as np

from . import kernels, metrics
from .container import read_container, write_container


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class MlpModel:
    layer_sizes: list
    weights: list  # weights[l] has shape sizes[l+1] x sizes[l]
    biases: list

    def copy(self):
        return MlpModel(
            list(self.layer_sizes),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    def prunable_weights(self):
        """Layer weight matrices only; biases are never pruned."""
        return self.weights

    def num_prunable(self):
        return sum(w.size for w in self.weights)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 128
    max_epochs: int = 200
    patience: int = 15
    weight_decay: float = 0.0  # decoupled, weights only
    seed: int = 0


@dataclass
class TrainResult:
    model: MlpModel
    val_auroc_history: list = field(default_factory=list)
    best_epoch: int = 0
    epochs_run: int = 0


def init_model(layer_sizes, seed) -> MlpModel:
    if len(layer_sizes) < 2:
        raise ValueError("need at least input and output layer sizes")
    if any(s < 1 for s in layer_sizes):
        raise ValueError("layer sizes must be positive")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(list(layer_sizes), weights, biases)


def forward(model: MlpModel, features):
    """Logits for a batch; apply sigmoid() for probabilities."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.layer_sizes[0]:
        raise ValueError(
            f"features must be N x {model.layer_sizes[0]}, got {x.shape}"
        )
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        x = np.maximum(x @ w.T + b, 0.0)
    return x @ model.weights[-1].T + model.biases[-1]


def sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def predict_proba(model, features):
    return sigmoid(forward(model, features))


def bce_loss_and_grad(model: MlpModel, features, labels):
    """Mean sigmoid cross-entropy (over samples and classes) and exact grads."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValueError("labels must be binary")
    n, c = y.shape

    acts = [x]
    h = x
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        h = np.maximum(h @ w.T + b, 0.0)
        acts.append(h)
    z = h @ model.weights[-1].T + model.biases[-1]

    # stable form: max(z,0) - z*y + log1p(exp(-|z|))
    loss = float(np.mean(np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))))

    delta = (sigmoid(z) - y) / (n * c)
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    for l in range(len(model.weights) - 1, -1, -1):
        grads_w[l] = delta.T @ acts[l]
        grads_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ model.weights[l]) * (acts[l] > 0.0)
    return loss, grads_w, grads_b


def _mean_val_auroc(model, features, labels):
    probs = predict_proba(model, features)
    vals = []
    for c in range(labels.shape[1]):
        col = labels[:, c]
        if 0 < col.sum() < col.size:
            vals.append(kernels.auroc_rank(probs[:, c], col.astype(np.float64)))
    if not vals:
        raise ValueError("validation AUROC undefined: every class single-valued")
    return float(np.mean(vals))


def train(dataset, layer_sizes, config: TrainConfig) -> TrainResult:
    """Adam + early stopping; returns the best validation-AUROC snapshot.

    Deterministic given (dataset, layer_sizes, config): the initial
    parameters and the shuffle order come from seeded generators.
    """
    tr = dataset.rows("train")
    va = dataset.rows("val")
    x_tr, y_tr = dataset.features[tr], dataset.labels[tr].astype(np.float64)
    x_va, y_va = dataset.features[va], dataset.labels[va]

    model = init_model(layer_sizes, config.seed)
    # Start the output biases at the train-split prior log-odds so that rare
    # classes begin calibrated instead of spending thousands of Adam steps
    # (bounded by the learning rate) dragging the bias toward its prior.
    prior = np.clip(y_tr.mean(axis=0), 0.5 / y_tr.shape[0], 1.0 - 0.5 / y_tr.shape[0])
    model.biases[-1][:] = np.log(prior / (1.0 - prior))
    params = model.weights + model.biases
    mom = [np.zeros_like(p) for p in params]
    vel = [np.zeros_like(p) for p in params]
    shuffle_rng = np.random.default_rng(config.seed + 1)

    best = model.copy()
    best_auroc = -np.inf
    best_epoch = 0
    stale = 0
    history = []
    step = 0
    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(x_tr.shape[0])
        for start in range(0, order.size, config.batch_size):
            batch = order[start : start + config.batch_size]
            loss, gw, gb = bce_loss_and_grad(model, x_tr[batch], y_tr[batch])
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss at epoch {epoch}")
            step += 1
            n_w = len(model.weights)
            for j, (p, g, m, v) in enumerate(zip(params, gw + gb, mom, vel)):
                kernels.adam_step(
                    p.reshape(-1), g.reshape(-1), m.reshape(-1), v.reshape(-1),
                    step, config.learning_rate, config.adam_beta1,
                    config.adam_beta2, config.adam_eps,
                )
                if config.weight_decay > 0.0 and j < n_w:
                    p *= 1.0 - config.learning_rate * config.weight_decay
        auroc = _mean_val_auroc(model, x_va, y_va)
        history.append(auroc)
        if auroc > best_auroc:
            best_auroc = auroc
            best = model.copy()
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    return TrainResult(best, history, best_epoch, len(history))


def weight_magnitude_histogram(model: MlpModel, bin_edges):
    """Counts of |w| over prunable weights; overflow bin past the last edge.

    Returns (counts, edges) with len(counts) = len(edges): counts[i] covers
    [edges[i], edges[i+1]) and counts[-1] everything >= edges[-1].
    """
    edges = np.asarray(bin_edges, dtype=np.float64)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0) or edges[0] < 0:
        raise ValueError("bin edges must be nonnegative and strictly increasing")
    mags = np.abs(np.concatenate([w.reshape(-1) for w in model.prunable_weights()]))
    counts = np.zeros(edges.size, dtype=np.int64)
    inner, _ = np.histogram(mags, bins=edges)
    counts[:-1] = inner
    counts[-1] = np.count_nonzero(mags >= edges[-1]) + np.count_nonzero(mags < edges[0])
    # values below the first edge cannot occur for nonnegative magnitudes
    # unless edges[0] > 0; they are folded into the overflow bucket above.
    return counts, edges


def save_model(model: MlpModel, path):
    meta = {"kind": "mlp-checkpoint", "version": 1, "layer_sizes": model.layer_sizes}
    arrays = {}
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        arrays[f"w{i:02d}"] = w
        arrays[f"b{i:02d}"] = b
    write_container(path, meta, arrays)


def load_model(path) -> MlpModel:
    meta, arrays = read_container(path)
    if meta.get("kind") != "mlp-checkpoint":
        raise ValueError(f"{path}: not a model checkpoint")
    sizes = meta["layer_sizes"]
    weights = [arrays[f"w{i:02d}"] for i in range(len(sizes) - 1)]
    biases = [arrays[f"b{i:02d}"] for i in range(len(sizes) - 1)]
    return MlpModel(sizes, weights, biases)


def mean_ap_on_split(model, dataset, split):
    idx = dataset.rows(split)
    probs = predict_proba(model, dataset.features[idx])
    triples = [
        (probs[:, c], dataset.labels[idx, c], dataset.class_names[c])
        for c in range(dataset.labels.shape[1])
    ]
    return metrics.mean_ap(triples)
