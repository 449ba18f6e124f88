"""Synthetic sphere datasets and a small full-batch MSE/Adam trainer."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .domain import Box
from .errors import ConfigError, DivergedLoss, ModelFormatError
from .net import AffineLayer, Mlp


@dataclass
class Dataset:
    inputs: np.ndarray  # (N, d)
    targets: np.ndarray  # (N, 1)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.targets.ndim == 1:
            self.targets = self.targets[:, None]
        if self.inputs.ndim != 2 or len(self.inputs) != len(self.targets):
            raise ModelFormatError(
                f"inputs and targets must have the same number of rows, got {len(self.inputs)} and {len(self.targets)}"
            )
        if not (np.isfinite(self.inputs).all() and np.isfinite(self.targets).all()):
            raise ModelFormatError("dataset contains NaN or Inf")

    def __len__(self):
        return len(self.inputs)

    def to_dict(self) -> dict:
        return {"inputs": self.inputs.tolist(), "targets": self.targets.tolist(), "meta": self.meta}


def load_dataset(path) -> Dataset:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return _load_csv(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}:{exc.colno}") from exc
    for key in ("inputs", "targets"):
        if key not in doc:
            raise ModelFormatError("missing field", key)
    return Dataset(doc["inputs"], doc["targets"], doc.get("meta", {}))


def _load_csv(path) -> Dataset:
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise ModelFormatError("non-numeric value", f"{path}:{lineno}") from None
    if not rows:
        raise ModelFormatError("no data rows", str(path))
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width or width < 2:
            raise ModelFormatError(f"expected {width} columns (at least 2)", f"{path}: data row {i + 1}")
    data = np.array(rows)
    return Dataset(data[:, :-1], data[:, -1:], {"source": str(path)})


def save_dataset(ds: Dataset, path) -> None:
    Path(path).write_text(json.dumps(ds.to_dict()) + "\n")


def gen_spheres(dim: int, n_spheres: int, n_points: int, domain: Box | None = None, seed: int = 0,
                noise_std: float = 0.1) -> Dataset:
    """Points uniform in ``domain``; targets near -1 inside any sphere and near +1 elsewhere.

    Sphere radii are uniform in [0.1, 0.4] times half the shortest domain side.
    """
    if n_spheres < 0 or n_points < 1:
        raise ConfigError("need n_spheres >= 0 and n_points >= 1")
    domain = domain or Box.cube(dim)
    if domain.dim != dim:
        raise ConfigError(f"domain has {domain.dim} dimensions, expected {dim}")
    rng = np.random.default_rng(seed)
    r_domain = 0.5 * float(domain.widths.min())
    centers = domain.low + rng.random((n_spheres, dim)) * domain.widths
    radii = rng.uniform(0.1 * r_domain, 0.4 * r_domain, size=n_spheres)
    x = domain.low + rng.random((n_points, dim)) * domain.widths
    inside = np.zeros(n_points, dtype=bool)
    for c, r in zip(centers, radii):
        inside |= ((x - c) ** 2).sum(axis=1) <= r * r
    y = np.where(inside, -1.0, 1.0) + rng.normal(0.0, noise_std, size=n_points)
    meta = {"seed": seed, "dim": dim, "noise_std": noise_std, "centers": centers.tolist(), "radii": radii.tolist(),
            "domain": domain.to_dict()}
    return Dataset(x, y[:, None], meta)


def mse_loss_and_grads(net: Mlp, X: np.ndarray, Y: np.ndarray):
    """Mean over the batch of ||f(x) - y||^2, with gradients for every (weights, bias)."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if len(X) == 0:
        raise ConfigError("empty batch")
    acts = [X]
    pres = []
    h = X
    for layer in net.layers:
        z = h @ layer.weights.T + layer.bias
        pres.append(z)
        h = np.maximum(z, 0.0) if layer.relu_after else z
        acts.append(h)
    err = h - Y
    loss = float((err * err).sum(axis=1).mean())
    delta = 2.0 * err / len(X)
    grads = [None] * len(net.layers)
    for li in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[li]
        grads[li] = (delta.T @ acts[li], delta.sum(axis=0))
        if li:
            delta = delta @ layer.weights
            if net.layers[li - 1].relu_after:
                delta = delta * (pres[li - 1] > 0)
    return loss, grads


@dataclass
class TrainConfig:
    learning_rate: float = 5e-4
    epochs: int = 500
    batch: int | None = None  # None: full batch
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ConfigError("learning rate must be nonnegative")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if self.batch is not None and self.batch < 1:
            raise ConfigError("batch must be at least 1")


def train(net: Mlp, dataset: Dataset, config: TrainConfig):
    """Adam with bias correction. Returns (trained net, losses).

    ``losses[e]`` is the full-data loss before epoch ``e``; the last entry is
    the loss after training.
    """
    if dataset.inputs.shape[1] != net.input_dim or dataset.targets.shape[1] != net.output_dim:
        raise ConfigError(
            f"dataset is {dataset.inputs.shape[1]} -> {dataset.targets.shape[1]} but network is "
            f"{net.input_dim} -> {net.output_dim}"
        )
    X, Y = dataset.inputs, dataset.targets
    params = [[layer.weights.copy(), layer.bias.copy()] for layer in net.layers]
    m = [[np.zeros_like(p) for p in pair] for pair in params]
    v = [[np.zeros_like(p) for p in pair] for pair in params]
    b1, b2, eps, lr = config.adam_beta1, config.adam_beta2, config.adam_eps, config.learning_rate
    rng = np.random.default_rng(config.seed)
    relu = [layer.relu_after for layer in net.layers]

    def build():
        return Mlp(tuple(AffineLayer(w, b, r) for (w, b), r in zip(params, relu)))

    losses = []
    step = 0
    current = net
    for _ in range(config.epochs):
        if config.batch is None or config.batch >= len(X):
            batches = [slice(None)]
        else:
            order = rng.permutation(len(X))
            batches = [order[i:i + config.batch] for i in range(0, len(X), config.batch)]
        if len(batches) > 1:
            losses.append(mse_loss_and_grads(current, X, Y)[0])
        for sel in batches:
            loss, grads = mse_loss_and_grads(current, X[sel], Y[sel])
            if len(batches) == 1:
                losses.append(loss)
            if not np.isfinite(loss):
                raise DivergedLoss(f"loss became {loss} at step {step}")
            step += 1
            c1 = 1 - b1**step
            c2 = 1 - b2**step
            for li, g_pair in enumerate(grads):
                for pi, g in enumerate(g_pair):
                    m[li][pi] = b1 * m[li][pi] + (1 - b1) * g
                    v[li][pi] = b2 * v[li][pi] + (1 - b2) * g * g
                    params[li][pi] = params[li][pi] - lr * (m[li][pi] / c1) / (np.sqrt(v[li][pi] / c2) + eps)
            current = build()
    final = mse_loss_and_grads(current, X, Y)[0]
    if not np.isfinite(final):
        raise DivergedLoss(f"final loss is {final}")
    losses.append(final)
    return current, losses
