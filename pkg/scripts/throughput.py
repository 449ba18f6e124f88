"""Wall time of UCB estimation against network depth and sample budget."""

import argparse
import time

import numpy as np

from lipsample import Box, EstimatorConfig, NormPair, estimate_ucb
from lipsample.net import init_mlp


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depths", default="1,3,5,7,9,11")
    ap.add_argument("--width", type=int, default=64)
    ap.add_argument("--budgets", default="10000,50000")
    ap.add_argument("--threads", type=int, default=4)
    args = ap.parse_args()

    pair = NormPair.parse("inf", "inf")
    print(f"{'depth':>5} {'samples':>8} {'seconds':>8} {'estimate':>12}")
    for depth in (int(v) for v in args.depths.split(",")):
        net = init_mlp([2] + [args.width] * depth + [1], np.random.default_rng(depth))
        for n in (int(v) for v in args.budgets.split(",")):
            t0 = time.perf_counter()
            rep = estimate_ucb(net, Box.cube(2), EstimatorConfig(n, pair, "ucb", threads=args.threads))
            print(f"{depth:>5} {n:>8} {time.perf_counter() - t0:>8.2f} {rep.estimate:>12.5g}")


if __name__ == "__main__":
    main()
