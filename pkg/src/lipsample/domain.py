"""Axis-aligned boxes, their partitions, uniform sampling and per-region statistics."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ModelFormatError, NonFiniteValue, PartitionTooLarge

MAX_PARTITION = 2**24


@dataclass(frozen=True)
class Box:
    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        low = np.array(self.low, dtype=np.float64).reshape(-1)
        high = np.array(self.high, dtype=np.float64).reshape(-1)
        if low.shape != high.shape or low.size == 0:
            raise ModelFormatError(f"low and high must be nonempty and equal length, got {low.size} and {high.size}")
        if not (np.isfinite(low).all() and np.isfinite(high).all()):
            raise ModelFormatError("box bounds must be finite")
        if not (low < high).all():
            bad = int(np.argmin(high - low))
            raise ModelFormatError(f"need low < high in every dimension (dimension {bad} fails)")
        low.setflags(write=False)
        high.setflags(write=False)
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @classmethod
    def cube(cls, dim: int, lo: float = -1.0, hi: float = 1.0) -> "Box":
        return cls(np.full(dim, lo), np.full(dim, hi))

    @property
    def dim(self) -> int:
        return self.low.size

    @property
    def widths(self) -> np.ndarray:
        return self.high - self.low

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(((x >= self.low) & (x <= self.high)).all())

    def to_dict(self) -> dict:
        return {"low": self.low.tolist(), "high": self.high.tolist()}

    def __eq__(self, other):
        return isinstance(other, Box) and np.array_equal(self.low, other.low) and np.array_equal(self.high, other.high)

    def __hash__(self):
        return hash((self.low.tobytes(), self.high.tobytes()))


def load_box(path) -> Box:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"invalid JSON: {exc.msg}", f"{path}:{exc.lineno}:{exc.colno}") from exc
    if not isinstance(doc, dict) or "low" not in doc or "high" not in doc:
        raise ModelFormatError("domain must be an object with 'low' and 'high'", str(path))
    return Box(doc["low"], doc["high"])


@dataclass
class RegionStats:
    n: int = 0
    max: float = -math.inf
    mean: float = 0.0
    m2: float = 0.0
    argmax: np.ndarray | None = field(default=None, repr=False)

    @property
    def variance(self) -> float:
        return self.m2 / (self.n - 1) if self.n >= 2 else 0.0

    @property
    def stddev(self) -> float:
        return math.sqrt(self.variance)


def update_stats(stats: RegionStats, value: float, x=None) -> RegionStats:
    """Welford update in place; returns ``stats`` for chaining."""
    value = float(value)
    if not math.isfinite(value):
        raise NonFiniteValue(f"sample value {value} is not finite")
    stats.n += 1
    delta = value - stats.mean
    stats.mean += delta / stats.n
    stats.m2 += delta * (value - stats.mean)
    if value > stats.max:
        stats.max = value
        stats.argmax = None if x is None else np.array(x, dtype=np.float64)
    return stats


def init_subregions(box: Box, k: int) -> list[Box]:
    """Regular K^d grid of congruent boxes, in lexicographic grid-index order."""
    if k < 1:
        raise ConfigError("k must be at least 1")
    d = box.dim
    if d * math.log2(k) > math.log2(MAX_PARTITION) + 1e-12:
        raise PartitionTooLarge(f"{k}^{d} subregions exceeds the limit of {MAX_PARTITION}")
    if k == 1:
        return [box]
    # shared cut points so neighbouring cells meet exactly
    cuts = [np.linspace(box.low[i], box.high[i], k + 1) for i in range(d)]
    cuts = [np.concatenate([[box.low[i]], c[1:-1], [box.high[i]]]) for i, c in enumerate(cuts)]
    out = []
    for idx in itertools.product(range(k), repeat=d):
        low = [cuts[i][j] for i, j in enumerate(idx)]
        high = [cuts[i][j + 1] for i, j in enumerate(idx)]
        out.append(Box(low, high))
    return out


def subdivide(box: Box) -> tuple[Box, Box]:
    """Halve the longest side (lowest index on ties) at its midpoint."""
    axis = int(np.argmax(box.widths))
    mid = 0.5 * (box.low[axis] + box.high[axis])
    left_high = box.high.copy()
    left_high[axis] = mid
    right_low = box.low.copy()
    right_low[axis] = mid
    return Box(box.low, left_high), Box(right_low, box.high)


def map_unit(box: Box, u: np.ndarray) -> np.ndarray:
    """Map points of [0, 1)^d into ``box``, clipped to its closed bounds."""
    return np.clip(box.low + u * box.widths, box.low, box.high)


def sample_uniform(box: Box, rng: np.random.Generator) -> np.ndarray:
    return map_unit(box, rng.random(box.dim))
