"""ReLU multilayer perceptrons: evaluation and a Clarke-Jacobian selection.

The ReLU derivative at a preactivation of exactly 0 is taken as 0, and the
activation pattern uses strict positivity, so the two always agree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, ModelFormatError, NonFiniteInput


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AffineLayer:
    weights: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray
    relu_after: bool = False

    def __post_init__(self):
        w = _frozen(self.weights)
        b = _frozen(self.bias)
        if w.ndim != 2 or w.shape[0] == 0 or w.shape[1] == 0:
            raise ModelFormatError(f"weights must be a nonempty 2-D matrix, got shape {w.shape}")
        if b.shape != (w.shape[0],):
            raise ModelFormatError(f"bias length {b.size} does not match {w.shape[0]} weight rows")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise ModelFormatError("non-finite weight or bias entry")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)
        object.__setattr__(self, "relu_after", bool(self.relu_after))

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class Mlp:
    layers: tuple

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ModelFormatError("network has no layers")
        for i in range(len(layers) - 1):
            if layers[i].out_dim != layers[i + 1].in_dim:
                raise ModelFormatError(
                    f"layer {i} outputs {layers[i].out_dim} values but layer {i + 1} "
                    f"expects {layers[i + 1].in_dim}",
                    where=f"layers[{i + 1}].weights",
                )
        if layers[-1].relu_after:
            raise ModelFormatError("final layer must not apply ReLU", where=f"layers[{len(layers) - 1}].relu_after")
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def arch(self) -> list[int]:
        return [self.input_dim] + [layer.out_dim for layer in self.layers]

    @property
    def n_hidden_units(self) -> int:
        return sum(layer.out_dim for layer in self.layers if layer.relu_after)


@dataclass(frozen=True)
class EvalTape:
    input: np.ndarray
    preactivations: list  # one vector per ReLU layer, in layer order
    output: np.ndarray
    pattern: np.ndarray = field(repr=False)


def _check_point(net: Mlp, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (net.input_dim,):
        raise DimensionMismatch(f"expected input of length {net.input_dim}, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise NonFiniteInput("input contains NaN or Inf")
    return x


def forward(net: Mlp, x) -> EvalTape:
    x = _check_point(net, x)
    h = x
    pre = []
    for layer in net.layers:
        z = layer.weights @ h + layer.bias
        if layer.relu_after:
            pre.append(z)
            h = np.maximum(z, 0.0)
        else:
            h = z
    pattern = np.concatenate([z > 0 for z in pre]) if pre else np.zeros(0, dtype=bool)
    return EvalTape(input=x, preactivations=pre, output=h, pattern=pattern)


def activation_pattern(net: Mlp, x) -> np.ndarray:
    return forward(net, x).pattern


def clarke_jacobian(net: Mlp, tape: EvalTape) -> np.ndarray:
    """Backpropagated Jacobian selection, one reverse pass per output row."""
    masks = iter(reversed([(z > 0).astype(np.float64) for z in tape.preactivations]))
    layer_masks = []
    for layer in reversed(net.layers):
        layer_masks.append(next(masks) if layer.relu_after else None)
    jac = np.empty((net.output_dim, net.input_dim))
    for row in range(net.output_dim):
        g = np.zeros(net.output_dim)
        g[row] = 1.0
        for layer, mask in zip(reversed(net.layers), layer_masks):
            if mask is not None:
                g = g * mask
            g = g @ layer.weights
        jac[row] = g
    return jac


# Batched evaluation. Points are carried as (B, 1, n) stacks so each point's
# arithmetic is independent of how many others share the batch.

def forward_batch(net: Mlp, X: np.ndarray):
    """Return (relu-layer preactivations, outputs) for rows of ``X``."""
    h = np.asarray(X, dtype=np.float64)[:, None, :]
    pre = []
    for layer in net.layers:
        z = h @ layer.weights.T + layer.bias
        if layer.relu_after:
            pre.append(z[:, 0, :])
            h = np.maximum(z, 0.0)
        else:
            h = z
    return pre, h[:, 0, :]


def jacobian_batch(net: Mlp, X: np.ndarray) -> np.ndarray:
    """Jacobian selections at every row of ``X``, shape (B, m, n)."""
    pre, _ = forward_batch(net, X)
    masks = iter(reversed(pre))
    last = net.layers[-1]
    g = np.broadcast_to(last.weights, (len(X),) + last.weights.shape)
    for layer in reversed(net.layers[:-1]):
        if layer.relu_after:
            g = g * (next(masks) > 0)[:, None, :]
        g = g @ layer.weights
    return np.ascontiguousarray(g)


def mlp_to_dict(net: Mlp) -> dict:
    return {
        "input_dim": net.input_dim,
        "layers": [
            {"weights": layer.weights.tolist(), "bias": layer.bias.tolist(), "relu_after": layer.relu_after}
            for layer in net.layers
        ],
    }


def _as_matrix(value, where):
    if not isinstance(value, list) or not value:
        raise ModelFormatError("expected a nonempty list of rows", where)
    width = None
    for r, row in enumerate(value):
        if not isinstance(row, list):
            raise ModelFormatError("expected a list of numbers", f"{where}[{r}]")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ModelFormatError(f"row has {len(row)} entries, expected {width}", f"{where}[{r}]")
        _as_vector(row, f"{where}[{r}]")
    return value


def _as_vector(value, where):
    if not isinstance(value, list):
        raise ModelFormatError("expected a list of numbers", where)
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ModelFormatError(f"expected a number, got {v!r}", f"{where}[{i}]")
        if not np.isfinite(v):
            raise ModelFormatError("value is not finite", f"{where}[{i}]")
    return value


def mlp_from_dict(doc) -> Mlp:
    if not isinstance(doc, dict):
        raise ModelFormatError("model must be a JSON object")
    if "layers" not in doc:
        raise ModelFormatError("missing field", "layers")
    raw = doc["layers"]
    if not isinstance(raw, list) or not raw:
        raise ModelFormatError("expected a nonempty list", "layers")
    layers = []
    prev = doc.get("input_dim")
    if prev is not None and (isinstance(prev, bool) or not isinstance(prev, int) or prev < 1):
        raise ModelFormatError("must be a positive integer", "input_dim")
    for i, spec in enumerate(raw):
        where = f"layers[{i}]"
        if not isinstance(spec, dict):
            raise ModelFormatError("expected an object", where)
        for key in ("weights", "bias"):
            if key not in spec:
                raise ModelFormatError("missing field", f"{where}.{key}")
        w = _as_matrix(spec["weights"], f"{where}.weights")
        b = _as_vector(spec["bias"], f"{where}.bias")
        if len(b) != len(w):
            raise ModelFormatError(f"length {len(b)} does not match {len(w)} weight rows", f"{where}.bias")
        if prev is not None and len(w[0]) != prev:
            raise ModelFormatError(f"rows have {len(w[0])} entries, expected {prev}", f"{where}.weights")
        relu = spec.get("relu_after", False)
        if not isinstance(relu, bool):
            raise ModelFormatError("expected true or false", f"{where}.relu_after")
        layers.append(AffineLayer(w, b, relu))
        prev = len(w)
    return Mlp(tuple(layers))


def load_mlp(path) -> Mlp:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}:{exc.colno}") from exc
    return mlp_from_dict(doc)


def save_mlp(net: Mlp, path) -> None:
    Path(path).write_text(json.dumps(mlp_to_dict(net)) + "\n")


def mlp_from_weights(weights, biases, relu_hidden=True) -> Mlp:
    """Stack affine maps, with ReLU after every layer but the last when ``relu_hidden``."""
    n = len(weights)
    return Mlp(tuple(AffineLayer(w, b, relu_hidden and i < n - 1) for i, (w, b) in enumerate(zip(weights, biases))))


def init_mlp(arch, rng: np.random.Generator) -> Mlp:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights and biases, ReLU between layers."""
    weights, biases = [], []
    for fan_in, fan_out in zip(arch[:-1], arch[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return mlp_from_weights(weights, biases)
