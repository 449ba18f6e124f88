"""Benchmark suites: train nets, compute a reference value, run estimators, tabulate."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data_train import TrainConfig, gen_spheres, train
from .domain import Box
from .errors import ConfigError, LipsampleError
from .estimators import EstimatorConfig, estimate
from .net import Mlp, init_mlp, load_mlp
from .norms import NormPair
from .oracle import GridSpec, breakpoint_oracle_1d, grid_oracle

COLUMNS = ["net_seed", "seed", "algorithm", "budget", "estimate", "reference", "rel_error", "wall_time_s", "status"]


@dataclass
class Suite:
    arch: list | None = None
    model: str | None = None
    seeds: list = field(default_factory=list)
    budgets: list = field(default_factory=list)
    algorithms: list = field(default_factory=list)
    domain: Box | None = None
    data: dict = field(default_factory=lambda: {"spheres": 3, "points": 800, "noise_std": 0.1})
    train: dict = field(default_factory=lambda: {"lr": 5e-4, "epochs": 500})
    estimator: dict = field(default_factory=dict)
    reference: dict = field(default_factory=lambda: {"mode": "grid", "grid": 400})


def load_suite(path) -> Suite:
    text = Path(path).read_text()
    if not text.strip():
        raise ConfigError(f"{path}: suite file is empty")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(doc, dict) or not doc:
        raise ConfigError(f"{path}: suite must be a nonempty JSON object")
    return suite_from_dict(doc)


def suite_from_dict(doc: dict) -> Suite:
    known = set(Suite.__dataclass_fields__) | {"n_seeds"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown suite keys: {sorted(unknown)}")
    doc = dict(doc)
    if "n_seeds" in doc:
        doc.setdefault("seeds", list(range(int(doc.pop("n_seeds")))))
    if doc.get("domain") is not None:
        doc["domain"] = Box(doc["domain"]["low"], doc["domain"]["high"])
    defaults = Suite()
    for key in ("data", "train", "reference"):
        merged = dict(getattr(defaults, key))
        merged.update(doc.get(key, {}))
        doc[key] = merged
    suite = Suite(**doc)
    if not suite.seeds or not suite.budgets or not suite.algorithms:
        raise ConfigError("suite needs nonempty seeds, budgets and algorithms")
    if (suite.arch is None) == (suite.model is None):
        raise ConfigError("suite needs exactly one of 'arch' or 'model'")
    return suite


def build_net(suite: Suite, seed: int) -> Mlp:
    arch = list(suite.arch)
    domain = suite.domain or Box.cube(arch[0])
    d = suite.data
    ds = gen_spheres(arch[0], int(d["spheres"]), int(d["points"]), domain, seed, float(d.get("noise_std", 0.1)))
    net0 = init_mlp(arch, np.random.default_rng(seed))
    t = suite.train
    cfg = TrainConfig(learning_rate=float(t["lr"]), epochs=int(t["epochs"]), seed=seed)
    return train(net0, ds, cfg)[0]


def reference_value(net: Mlp, domain: Box, pair: NormPair, ref: dict, threads: int = 1) -> float:
    mode = ref.get("mode", "grid")
    if mode == "grid":
        return grid_oracle(net, domain, GridSpec(int(ref.get("grid", 400)), bool(ref.get("jitter", False))), pair,
                           threads)[0]
    if mode == "breakpoints":
        return breakpoint_oracle_1d(net, domain, pair)[0]
    if mode == "uniform":
        cfg = EstimatorConfig(int(ref.get("samples", 10**6)), pair, "uniform", seed=int(ref.get("seed", 0)),
                              threads=threads)
        return estimate(net, domain, cfg).estimate
    raise ConfigError(f"unknown reference mode {mode!r}")


def run_suite(suite: Suite, threads: int = 1, progress=None):
    """Yield one result dict per (net, seed, algorithm, budget)."""
    est = suite.estimator
    pair = NormPair.parse(est.get("alpha", "inf"), est.get("beta", "inf"))
    fixed = load_mlp(suite.model) if suite.model else None
    ref_cache = {}
    for seed in suite.seeds:
        net_seed = "" if fixed else seed
        try:
            net = fixed or build_net(suite, seed)
            domain = suite.domain or Box.cube(net.input_dim)
            if net_seed not in ref_cache:
                ref_cache[net_seed] = reference_value(net, domain, pair, suite.reference, threads)
            ref = ref_cache[net_seed]
        except (LipsampleError, ArithmeticError, ValueError) as exc:
            for alg in suite.algorithms:
                for budget in suite.budgets:
                    yield _row(net_seed, seed, alg, budget, None, None, None, f"failed: {exc}")
            continue
        for alg in suite.algorithms:
            for budget in suite.budgets:
                try:
                    cfg = EstimatorConfig(int(budget), pair, alg, k_divisions=int(est.get("k", 2)),
                                          c=float(est.get("c", 10.0)), t_m=float(est.get("tm", 2.0)),
                                          n0=int(est.get("n0", 10)), seed=seed,
                                          sigma_mode=est.get("sigma_mode", "stddev"), threads=threads)
                    rep = estimate(net, domain, cfg)
                    row = _row(net_seed, seed, alg, budget, rep.estimate, ref, rep.wall_time, "ok")
                except (LipsampleError, ArithmeticError, ValueError) as exc:
                    row = _row(net_seed, seed, alg, budget, None, ref, None, f"failed: {exc}")
                if progress:
                    progress(row)
                yield row


def relative_error(reference: float, value: float) -> float:
    """Signed shortfall (reference - value) / reference; negative when value exceeds reference."""
    if reference == 0:
        return 0.0 if value == 0 else -np.inf
    return (reference - value) / reference


def _row(net_seed, seed, alg, budget, value, ref, wall, status):
    rel = relative_error(ref, value) if value is not None and ref is not None else None
    return {"net_seed": net_seed, "seed": seed, "algorithm": alg, "budget": budget, "estimate": value,
            "reference": ref, "rel_error": rel, "wall_time_s": wall, "status": status}


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_rows(rows, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(COLUMNS)
    n = 0
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in COLUMNS])
        n += 1
    return n
