"""Paired comparison of adaptive (UCB) and uniform sampling on trained 2-D nets.

The reference for each net is a dense lattice maximum.
"""

import argparse
import csv
import sys

import numpy as np

from lipsample import Box, EstimatorConfig, NormPair, estimate_ucb, estimate_uniform
from lipsample.oracle import GridSpec, grid_oracle
from lipsample.data_train import TrainConfig, gen_spheres, train
from lipsample.net import init_mlp


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nets", type=int, default=30)
    ap.add_argument("--samples", type=int, default=20_000)
    ap.add_argument("--grid", type=int, default=2001)
    ap.add_argument("--c", type=float, default=10.0)
    ap.add_argument("--tm", type=float, default=2.0)
    ap.add_argument("--out", help="optional per-net CSV")
    args = ap.parse_args()

    pair = NormPair.parse("inf", "inf")
    box = Box.cube(2)
    rows = []
    for seed in range(args.nets):
        ds = gen_spheres(2, 3, 800, seed=seed)
        net, _ = train(init_mlp([2, 16, 16, 1], np.random.default_rng(seed)), ds, TrainConfig(seed=seed))
        ref, _ = grid_oracle(net, box, GridSpec(args.grid), pair)
        u = estimate_ucb(net, box, EstimatorConfig(args.samples, pair, "ucb", c=args.c, t_m=args.tm, seed=seed))
        v = estimate_uniform(net, box, EstimatorConfig(args.samples, pair, seed=seed))
        rows.append((seed, ref, (ref - u.estimate) / ref, (ref - v.estimate) / ref))
        print(f"net {seed:>2}: ref {ref:.6g}  ucb {rows[-1][2]:+.3e}  uniform {rows[-1][3]:+.3e}", file=sys.stderr)

    ucb = np.array([r[2] for r in rows])
    uni = np.array([r[3] for r in rows])
    print(f"median relative error: ucb {np.median(ucb):.3e}, uniform {np.median(uni):.3e}")
    print(f"ucb better on {(ucb < uni).sum()}, tied on {(ucb == uni).sum()}, worse on {(ucb > uni).sum()} nets")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["net_seed", "reference", "rel_error_ucb", "rel_error_uniform"])
            w.writerows(rows)


if __name__ == "__main__":
    main()
