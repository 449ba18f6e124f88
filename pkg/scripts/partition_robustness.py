"""Relative error of partitioned sampling versus the number of subregions per axis.

Trains one sphere-data net, takes a long uniform run as the reference and
reports quartiles of the relative error over seeds for each K.
"""

import argparse

import numpy as np

from lipsample import Box, EstimatorConfig, NormPair, estimate_partitioned, estimate_uniform
from lipsample.data_train import TrainConfig, gen_spheres, train
from lipsample.net import init_mlp


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--arch", default="7,8,8,8,8,1")
    ap.add_argument("--ks", default="1,2,3")
    ap.add_argument("--samples", type=int, default=60_000)
    ap.add_argument("--reference-samples", type=int, default=10**6)
    ap.add_argument("--seeds", type=int, default=30)
    ap.add_argument("--net-seed", type=int, default=0)
    args = ap.parse_args()

    arch = [int(v) for v in args.arch.split(",")]
    ds = gen_spheres(arch[0], 3, 800, seed=args.net_seed)
    net, _ = train(init_mlp(arch, np.random.default_rng(args.net_seed)), ds, TrainConfig(seed=args.net_seed))
    box = Box.cube(arch[0])
    pair = NormPair.parse("inf", "inf")
    ref = estimate_uniform(net, box, EstimatorConfig(args.reference_samples, pair, seed=10**6)).estimate
    print(f"reference ({args.reference_samples} uniform samples): {ref:.6g}")
    print(f"{'K':>3} {'q25':>9} {'median':>9} {'q75':>9}")
    for k in (int(v) for v in args.ks.split(",")):
        errs = []
        for seed in range(args.seeds):
            cfg = EstimatorConfig(args.samples, pair, "partitioned", k_divisions=k, seed=seed)
            errs.append((ref - estimate_partitioned(net, box, cfg).estimate) / ref)
        q = np.percentile(errs, [25, 50, 75])
        print(f"{k:>3} {q[0]:>9.4f} {q[1]:>9.4f} {q[2]:>9.4f}")


if __name__ == "__main__":
    main()
