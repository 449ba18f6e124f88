"""Reference values for the Lipschitz constant, independent of the samplers.

``grid_oracle`` evaluates a dense lattice (a lower reference, up to
discretization). ``breakpoint_oracle_1d`` is exact for one-input networks:
the network is affine between consecutive ReLU breakpoints, so evaluating
one interior point per segment covers every Jacobian it takes.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .domain import Box
from .errors import ConfigError, DimensionMismatch, GridTooLarge
from .estimators import CHUNK, sample_value
from .net import Mlp, forward_batch, jacobian_batch
from .norms import NormPair, induced_norm_batch

MAX_GRID_POINTS = 10**8
DEDUP_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    points_per_dim: int
    include_midpoint_jitter: bool = False

    def __post_init__(self):
        if self.points_per_dim < 2:
            raise ConfigError("points_per_dim must be at least 2")


def _check_grid(spec: GridSpec, dim: int):
    if dim * np.log10(spec.points_per_dim) > np.log10(MAX_GRID_POINTS) + 1e-12:
        raise GridTooLarge(f"{spec.points_per_dim}^{dim} lattice points exceeds the limit of {MAX_GRID_POINTS:.0e}")


def lattice_axes(domain: Box, points: int) -> list[np.ndarray]:
    axes = []
    for lo, hi in zip(domain.low, domain.high):
        a = np.linspace(lo, hi, points)
        a[0], a[-1] = lo, hi
        axes.append(a)
    return axes


def iter_lattice(axes, chunk: int = CHUNK * 16):
    """Yield blocks of lattice points in lexicographic (row-major) order."""
    shape = tuple(len(a) for a in axes)
    total = int(np.prod(shape))
    for start in range(0, total, chunk):
        idx = np.unravel_index(np.arange(start, min(start + chunk, total)), shape)
        yield np.stack([a[i] for a, i in zip(axes, idx)], axis=1)


def _values(net, pair, X):
    return induced_norm_batch(jacobian_batch(net, X), pair)


def _lattice_max(net, pair, axes, threads):
    blocks = iter_lattice(axes)
    best, best_x = -np.inf, None
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = pool.map(lambda X: (X, _values(net, pair, X)), blocks)
            for X, v in results:
                best, best_x = _fold(best, best_x, X, v)
    else:
        for X in blocks:
            best, best_x = _fold(best, best_x, X, _values(net, pair, X))
    return best, best_x


def _fold(best, best_x, X, v):
    j = int(np.argmax(v))
    if v[j] > best:
        return float(v[j]), X[j].copy()
    return best, best_x


def grid_oracle(net: Mlp, domain: Box, spec: GridSpec, pair: NormPair, threads: int = 1):
    """Largest Jacobian norm over the lattice (faces included), plus cell centers if requested.

    Ties go to the lexicographically smallest point.
    """
    if domain.dim != net.input_dim:
        raise DimensionMismatch(f"domain has {domain.dim} dimensions, network takes {net.input_dim}")
    _check_grid(spec, domain.dim)
    axes = lattice_axes(domain, spec.points_per_dim)
    best, best_x = _lattice_max(net, pair, axes, threads)
    if spec.include_midpoint_jitter:
        centers = [0.5 * (a[:-1] + a[1:]) for a in axes]
        c_best, c_x = _lattice_max(net, pair, centers, threads)
        if c_best > best or (c_best == best and tuple(c_x) < tuple(best_x)):
            best, best_x = c_best, c_x
    return best, best_x


def enumerate_breakpoints(net: Mlp, interval: Box) -> np.ndarray:
    """Sorted interior inputs where some hidden preactivation crosses zero (1-input nets)."""
    if net.input_dim != 1:
        raise DimensionMismatch("breakpoint enumeration needs a network with one input")
    a, b = float(interval.low[0]), float(interval.high[0])
    pts = np.array([a, b])
    n_relu = sum(layer.relu_after for layer in net.layers)
    for k in range(n_relu):
        z = forward_batch(net, pts[:, None])[0][k]  # (P, width), affine in x on each segment
        z0, z1 = z[:-1], z[1:]
        cross = (z0 * z1) < 0
        seg, _ = np.nonzero(cross)
        if seg.size:
            left, right = pts[seg], pts[seg + 1]
            za, zb = z0[cross], z1[cross]
            roots = left + (right - left) * (za / (za - zb))
            pts = _dedup(np.concatenate([pts, np.clip(roots, a, b)]), a, b)
    return pts[1:-1]


def _dedup(pts, a, b):
    pts = np.sort(pts)
    keep = [a]
    for p in pts:
        if p - keep[-1] > DEDUP_TOL:
            keep.append(float(p))
    if b - keep[-1] <= DEDUP_TOL:
        keep[-1] = b
    else:
        keep.append(b)
    return np.array(keep)


def breakpoint_oracle_1d(net: Mlp, interval: Box, pair: NormPair):
    """Exact constant on the interval: the best Jacobian norm over segment midpoints."""
    bps = enumerate_breakpoints(net, interval)
    edges = np.concatenate([[interval.low[0]], bps, [interval.high[0]]])
    mids = 0.5 * (edges[:-1] + edges[1:])
    vals = [sample_value(net, pair, [m]) for m in mids]
    j = int(np.argmax(vals))
    return float(vals[j]), np.array([mids[j]])


def write_heatmap(net: Mlp, domain: Box, points: int, pair: NormPair, fh) -> int:
    """Write ``x0,...,norm`` CSV rows over the lattice, row-major; returns the row count."""
    spec = GridSpec(points)
    _check_grid(spec, domain.dim)
    header = ",".join(f"x{i}" for i in range(domain.dim)) + ",norm\n"
    fh.write(header)
    rows = 0
    for X in iter_lattice(lattice_axes(domain, points)):
        v = _values(net, pair, X)
        block = np.column_stack([X, v])
        fh.write("\n".join(",".join(f"{x:.17g}" for x in row) for row in block))
        fh.write("\n")
        rows += len(block)
    return rows
