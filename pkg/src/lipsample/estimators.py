"""Sampling estimators of the local (alpha, beta)-Lipschitz constant.

All three return a lower bound: the largest induced norm of a backpropagated
Jacobian seen over the sampled points.

Every run consumes one stream of unit-cube draws from ``default_rng(seed)``,
one row per sample in draw order; a sample placed in a box maps its row
affinely into that box. Running with a larger budget therefore replays the
smaller run as a prefix.
"""

from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .domain import Box, RegionStats, init_subregions, map_unit, subdivide, update_stats
from .errors import ConfigError
from .net import Mlp, clarke_jacobian, forward, jacobian_batch
from .norms import NormPair, NormTag, induced_norm, induced_norm_batch

CHUNK = 4096
MAX_SPECULATION = 512


class Algorithm(enum.Enum):
    UNIFORM = "uniform"
    PARTITIONED = "partitioned"
    UCB = "ucb"


@dataclass
class EstimatorConfig:
    samples: int
    pair: NormPair = field(default_factory=lambda: NormPair(NormTag.INF, NormTag.INF))
    algorithm: Algorithm = Algorithm.UNIFORM
    k_divisions: int = 2
    c: float = 10.0
    t_m: float = 2.0
    n0: int = 10
    seed: int = 0
    sigma_mode: str = "stddev"
    threads: int = 1
    trace_every: int = 1000

    def __post_init__(self):
        self.algorithm = Algorithm(self.algorithm)
        if self.samples < 1:
            raise ConfigError("samples must be at least 1")
        if not self.t_m > 1:
            raise ConfigError("subdivision time multiplier must exceed 1")
        if self.n0 < 1:
            raise ConfigError("bootstrap threshold n0 must be at least 1")
        if self.k_divisions < 1:
            raise ConfigError("k must be at least 1")
        if not self.c >= 0:
            raise ConfigError("exploration constant c must be nonnegative")
        if self.sigma_mode not in ("stddev", "variance"):
            raise ConfigError("sigma_mode must be 'stddev' or 'variance'")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")


@dataclass
class EstimateReport:
    estimate: float
    argmax_x: np.ndarray
    samples_used: int
    wall_time: float
    regions: list  # (Box, RegionStats) at termination
    trace: list = field(default_factory=list)
    config: EstimatorConfig | None = None

    def to_dict(self, include_wall_time: bool = True) -> dict:
        cfg = self.config
        out = {
            "estimate": self.estimate,
            "argmax": self.argmax_x.tolist(),
            "samples_used": self.samples_used,
            "wall_time_s": self.wall_time if include_wall_time else None,
            "algorithm": cfg.algorithm.value if cfg else None,
            "norm_pair": cfg.pair.to_json() if cfg else None,
            "seed": cfg.seed if cfg else None,
            "regions": [
                {"low": box.low.tolist(), "high": box.high.tolist(), "n": st.n,
                 "max": st.max if st.n else None}
                for box, st in self.regions
            ],
            "trace": [[i, r] for i, r in self.trace],
        }
        if not include_wall_time:
            del out["wall_time_s"]
        return out


def sample_value(net: Mlp, pair: NormPair, x) -> float:
    return induced_norm(clarke_jacobian(net, forward(net, x)), pair)


def sample_values(net: Mlp, pair: NormPair, X: np.ndarray, threads: int = 1) -> np.ndarray:
    """Batched ``sample_value`` over the rows of ``X``.

    Fixed-size chunks keep results identical for any thread count.
    """
    X = np.asarray(X, dtype=np.float64)
    if len(X) <= CHUNK:
        return induced_norm_batch(jacobian_batch(net, X), pair)
    chunks = [X[i:i + CHUNK] for i in range(0, len(X), CHUNK)]
    work = lambda c: induced_norm_batch(jacobian_batch(net, c), pair)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    return np.concatenate(parts)


class _UnitStream:
    """Lazily drawn rows of U[0,1)^d, addressable by sample index."""

    def __init__(self, rng, dim, total):
        self.rng, self.dim, self.total = rng, dim, total
        self.buf = np.empty((0, dim))
        self.start = 0

    def rows(self, i, count):
        end = i + count
        while self.start + len(self.buf) < end:
            keep = self.buf[i - self.start:]
            more = self.rng.random((max(CHUNK * 16, count), self.dim))
            self.start = i
            self.buf = np.concatenate([keep, more])
        return self.buf[i - self.start:end - self.start]


def _check_domain(net, domain):
    if domain.dim != net.input_dim:
        raise ConfigError(f"domain has {domain.dim} dimensions but the network takes {net.input_dim} inputs")


def estimate_uniform(net: Mlp, domain: Box, config: EstimatorConfig) -> EstimateReport:
    return _fixed_allocation(net, domain, [domain], config)


def estimate_partitioned(net: Mlp, domain: Box, config: EstimatorConfig) -> EstimateReport:
    return _fixed_allocation(net, domain, init_subregions(domain, config.k_divisions), config)


def _fixed_allocation(net, domain, regions, config):
    """Fixed per-region budgets: draw row i goes to region i mod |regions|.

    Region r thus receives floor(N/|S|) samples, plus one when r < N mod |S|,
    and its samples for budget N are a prefix of those for any larger budget.
    """
    _check_domain(net, domain)
    n, n_reg = config.samples, len(regions)
    lows = np.array([b.low for b in regions])
    highs = np.array([b.high for b in regions])
    stream = _UnitStream(np.random.default_rng(config.seed), domain.dim, n)

    t0 = time.perf_counter()
    xs, vals = [], []
    for i in range(0, n, CHUNK * 16):
        own = np.arange(i, min(n, i + CHUNK * 16)) % n_reg
        u = stream.rows(i, len(own))
        lo, hi = lows[own], highs[own]
        x = np.clip(lo + u * (hi - lo), lo, hi)
        xs.append(x)
        vals.append(sample_values(net, config.pair, x, config.threads))
    X = np.concatenate(xs)
    values = np.concatenate(vals)
    wall = time.perf_counter() - t0

    if not np.isfinite(values).all():
        raise ArithmeticError("non-finite Jacobian norm encountered")
    best = int(np.argmax(values))
    stats = _region_stats(values, X, n_reg)
    trace = _trace_points(np.maximum.accumulate(values), config.trace_every)
    return EstimateReport(
        estimate=float(values[best]),
        argmax_x=X[best].copy(),
        samples_used=n,
        wall_time=wall,
        regions=list(zip(regions, stats)),
        trace=trace,
        config=config,
    )


def _region_stats(values, X, n_reg):
    """RegionStats per region for round-robin assigned samples."""
    n = len(values)
    order = np.argsort(np.arange(n) % n_reg, kind="stable")
    v = values[order]
    counts = np.bincount(np.arange(n) % n_reg, minlength=n_reg)
    out = []
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    live = counts > 0
    s, c = starts[live], counts[live]
    maxes = np.maximum.reduceat(v, s)
    means = np.add.reduceat(v, s) / c
    dev = v - np.repeat(means, c)
    m2 = np.add.reduceat(dev * dev, s)
    hit = v == np.repeat(maxes, c)
    first = np.minimum.reduceat(np.where(hit, np.arange(n), n), s)
    j = 0
    for cnt in counts:
        if cnt == 0:
            out.append(RegionStats())
            continue
        out.append(RegionStats(n=int(cnt), max=float(maxes[j]), mean=float(means[j]), m2=float(m2[j]),
                               argmax=X[order[first[j]]].copy()))
        j += 1
    return out


def _trace_points(running, every):
    n = len(running)
    idx = list(range(every, n + 1, every)) if every > 0 else []
    if not idx or idx[-1] != n:
        idx.append(n)
    return [(i, float(running[i - 1])) for i in idx]


def ucb_score(stats: RegionStats, t: int, config: EstimatorConfig) -> float:
    """s_max + c * sqrt(ln(t + 1) / s_n) * sigma, or +inf while s_n <= n0."""
    if stats.n <= config.n0:
        return math.inf
    sigma = stats.variance if config.sigma_mode == "variance" else stats.stddev
    return stats.max + config.c * math.sqrt(math.log(t + 1) / stats.n) * sigma


def subdivision_deadlines(t_m: float, limit: int) -> list[int]:
    """Iterations (<= limit) at which the UCB loop subdivides a region."""
    out, t = [], t_m
    while math.ceil(t) <= limit:
        if not out or math.ceil(t) > out[-1]:
            out.append(math.ceil(t))
        t *= t_m
    return out


def estimate_ucb(net: Mlp, domain: Box, config: EstimatorConfig) -> EstimateReport:
    """Adaptive partitioning driven by UCB scores.

    Regions live in a list in creation order, so picking the first maximal
    score breaks ties towards the earliest-created region. At each deadline
    the selected region is replaced by its two halves and the sample goes to
    the first half. Points are evaluated in speculative batches for the
    currently selected region; a batch is cut at the first iteration whose
    selection differs, so the committed sequence is exactly the sequential
    algorithm's.
    """
    _check_domain(net, domain)
    n, n0, c = config.samples, config.n0, config.c
    use_var = config.sigma_mode == "variance"
    stream = _UnitStream(np.random.default_rng(config.seed), domain.dim, n)
    boxes: list[Box] = [domain]
    stats: list[RegionStats] = [RegionStats()]
    deadlines = iter(subdivision_deadlines(config.t_m, n))
    deadline = next(deadlines, None)
    every = config.trace_every
    trace = []
    best, best_x = -math.inf, None
    log = math.log
    sqrt = math.sqrt

    # score_j(t) = head[j] + sqrt(ln(t + 1)) * slope[j]; head is +inf while bootstrapping
    head: list[float] = [math.inf]
    slope: list[float] = [0.0]

    def refresh(j):
        st = stats[j]
        if st.n <= n0:
            head[j], slope[j] = math.inf, 0.0
        else:
            var = st.m2 / (st.n - 1)
            head[j] = st.max
            slope[j] = c * (var if use_var else sqrt(var)) / sqrt(st.n)

    def select(t):
        g = sqrt(log(t + 1))
        scores = [h + g * k for h, k in zip(head, slope)]
        return scores.index(max(scores))

    t0 = time.perf_counter()
    i = 1
    span = 1
    while i <= n:
        j = select(i)
        if i == deadline:
            left, right = subdivide(boxes[j])
            del boxes[j], stats[j], head[j], slope[j]
            boxes += [left, right]
            stats += [RegionStats(), RegionStats()]
            head += [math.inf, math.inf]
            slope += [0.0, 0.0]
            j = len(boxes) - 2
            deadline = next(deadlines, None)
        size = min(span, n - i + 1)
        box, st = boxes[j], stats[j]
        X = map_unit(box, stream.rows(i - 1, size))
        vals = sample_values(net, config.pair, X)
        used = 0
        for b in range(size):
            if b and (i == deadline or select(i) != j):
                break
            v = float(vals[b])
            if not math.isfinite(v):
                raise ArithmeticError("non-finite Jacobian norm encountered")
            update_stats(st, v, X[b])
            refresh(j)
            if v > best:
                best, best_x = v, X[b].copy()
            if every and i % every == 0:
                trace.append((i, best))
            i += 1
            used += 1
        span = min(2 * span, MAX_SPECULATION) if used == size else max(1, used // 2)
    wall = time.perf_counter() - t0
    if not trace or trace[-1][0] != n:
        trace.append((n, best))
    return EstimateReport(
        estimate=best,
        argmax_x=best_x,
        samples_used=n,
        wall_time=wall,
        regions=list(zip(boxes, stats)),
        trace=trace,
        config=config,
    )


def estimate(net: Mlp, domain: Box, config: EstimatorConfig) -> EstimateReport:
    runner = {
        Algorithm.UNIFORM: estimate_uniform,
        Algorithm.PARTITIONED: estimate_partitioned,
        Algorithm.UCB: estimate_ucb,
    }[config.algorithm]
    return runner(net, domain, config)
