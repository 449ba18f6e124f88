"""Command-line entry point: ``lipsample <command> [flags]``.

Exit codes: 0 ok, 2 usage or config error, 3 domain error (unsupported norm
pair, size guard exceeded), 4 file I/O error.
"""

from __future__ import annotations

import argparse
import datetime
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import load_suite, run_suite, write_rows
from .data_train import TrainConfig, gen_spheres, load_dataset, train
from .domain import Box, load_box
from .errors import ConfigError, DimensionMismatch, LipsampleError
from .estimators import EstimatorConfig, estimate
from .net import init_mlp, load_mlp, mlp_to_dict
from .norms import NormPair
from .oracle import GridSpec, breakpoint_oracle_1d, enumerate_breakpoints, grid_oracle, write_heatmap

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_IO = 0, 2, 3, 4

REQUIRED = {
    "gen-data": ["dim", "out"],
    "train": ["data", "arch", "out"],
    "estimate": ["model"],
    "oracle": ["model"],
    "heatmap": ["model"],
    "bench": ["suite", "out"],
}


def _norm_flags(p):
    p.add_argument("--alpha", default="inf", help="input-space norm: 1, 2 or inf (default inf)")
    p.add_argument("--beta", default="inf", help="output-space norm: 1, 2 or inf (default inf)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of flag defaults (flags override it)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for batched evaluation (default 1)")

    parser = argparse.ArgumentParser(prog="lipsample", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[common], help="generate a synthetic sphere dataset")
    p.add_argument("--dim", type=int, help="input dimension (required)")
    p.add_argument("--spheres", type=int, default=3, help="number of spheres with target -1 (default 3)")
    p.add_argument("--points", type=int, default=800, help="number of points (default 800)")
    p.add_argument("--domain", help="domain JSON {low, high}; default [-1,1]^dim")
    p.add_argument("--noise-std", type=float, default=0.1, help="target noise standard deviation (default 0.1)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="dataset JSON to write (required)")

    p = sub.add_parser("train", parents=[common], help="train an MLP with MSE loss and Adam")
    p.add_argument("--data", help="dataset JSON or CSV (required)")
    p.add_argument("--arch", help="comma-separated layer widths, e.g. 2,16,16,1 (required)")
    p.add_argument("--lr", type=float, default=5e-4, help="Adam learning rate (default 5e-4)")
    p.add_argument("--epochs", type=int, default=500, help="training epochs (default 500)")
    p.add_argument("--batch", type=int, default=None, help="minibatch size (default: full batch)")
    p.add_argument("--seed", type=int, default=0, help="seed for initialization and shuffling")
    p.add_argument("--out", help="model JSON to write (required)")

    p = sub.add_parser("estimate", parents=[common], help="estimate the local Lipschitz constant by sampling")
    p.add_argument("--model", help="model JSON (required)")
    p.add_argument("--domain", help="domain JSON {low, high}; default [-1,1]^d")
    p.add_argument("--alg", choices=["uniform", "partitioned", "ucb"], default="ucb")
    p.add_argument("--samples", type=int, default=60000, help="sample budget N (default 60000)")
    _norm_flags(p)
    p.add_argument("--k", type=int, default=2, help="divisions per dimension for --alg partitioned (default 2)")
    p.add_argument("--c", type=float, default=10.0, help="UCB exploration constant (default 10)")
    p.add_argument("--tm", type=float, default=2.0, help="UCB subdivision time multiplier (default 2)")
    p.add_argument("--n0", type=int, default=10, help="UCB bootstrap sample count per region (default 10)")
    p.add_argument("--sigma-mode", choices=["stddev", "variance"], default="stddev")
    p.add_argument("--trace-every", type=int, default=1000, help="trace milestone spacing (default 1000)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report JSON to write (default stdout)")

    p = sub.add_parser("oracle", parents=[common], help="reference value by dense grid or exact 1-D breakpoints")
    p.add_argument("--model", help="model JSON (required)")
    p.add_argument("--domain", help="domain JSON {low, high}; default [-1,1]^d")
    p.add_argument("--mode", choices=["grid", "breakpoints"], default="grid")
    p.add_argument("--grid", type=int, default=400, help="lattice points per dimension (default 400)")
    p.add_argument("--jitter", action="store_true", help="also evaluate lattice cell centers")
    _norm_flags(p)
    p.add_argument("--out", help="report JSON to write (default stdout)")

    p = sub.add_parser("heatmap", parents=[common], help="CSV of Jacobian norms over a 2-D lattice")
    p.add_argument("--model", help="model JSON with two inputs (required)")
    p.add_argument("--domain", help="domain JSON {low, high}; default [-1,1]^2")
    p.add_argument("--grid", type=int, default=400, help="lattice points per dimension (default 400)")
    _norm_flags(p)
    p.add_argument("--out", help="CSV to write (default stdout)")

    p = sub.add_parser("bench", parents=[common], help="run a benchmark suite and tabulate relative errors")
    p.add_argument("--suite", help="suite JSON (required)")
    p.add_argument("--out", help="results CSV to write (required)")
    return parser


def parse_args(argv):
    parser = build_parser()
    pre, _ = build_parser().parse_known_args(argv)
    if getattr(pre, "config", None):
        try:
            doc = json.loads(Path(pre.config).read_text())
        except json.JSONDecodeError as exc:
            parser.error(f"{pre.config}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}")
        if not isinstance(doc, dict):
            parser.error(f"{pre.config}: config must be a JSON object")
        sub = parser._subparsers._group_actions[0].choices[pre.command]
        sub.set_defaults(**{k.replace("-", "_"): v for k, v in doc.items()})
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    missing = [f"--{name.replace('_', '-')}" for name in REQUIRED[args.command] if getattr(args, name) is None]
    if missing:
        sub.error(f"missing required flags: {', '.join(missing)}")
    if args.threads < 1:
        sub.error("--threads must be at least 1")
    return args


def _domain(args, dim):
    if getattr(args, "domain", None):
        box = load_box(args.domain)
        if box.dim != dim:
            raise ConfigError(f"{args.domain}: domain has {box.dim} dimensions, model takes {dim}")
        return box
    return Box.cube(dim)


def _dump(doc) -> str:
    # repr-based floats round-trip exactly
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


def _emit(args, text, inputs, outputs_extra=None):
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    manifest = {
        "command": args.command,
        "config": {k: v for k, v in sorted(vars(args).items()) if k not in ("command",)},
        "inputs": inputs,
        "outputs": [out] if out else ["<stdout>"],
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "seed": getattr(args, "seed", None),
    }
    if outputs_extra:
        manifest.update(outputs_extra)
    if out:
        Path(out + ".manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    else:
        sys.stderr.write(json.dumps(manifest) + "\n")


def cmd_gen_data(args):
    domain = load_box(args.domain) if args.domain else Box.cube(args.dim)
    ds = gen_spheres(args.dim, args.spheres, args.points, domain, args.seed, args.noise_std)
    _emit(args, json.dumps(ds.to_dict()) + "\n", [args.domain] if args.domain else [])


def cmd_train(args):
    try:
        arch = [int(v) for v in str(args.arch).split(",")]
    except ValueError:
        raise ConfigError(f"--arch must be comma-separated integers, got {args.arch!r}") from None
    if len(arch) < 2 or min(arch) < 1:
        raise ConfigError("--arch needs at least two positive widths")
    cfg = TrainConfig(learning_rate=args.lr, epochs=args.epochs, batch=args.batch, seed=args.seed)
    ds = load_dataset(args.data)
    net0 = init_mlp(arch, np.random.default_rng(args.seed))
    net, losses = train(net0, ds, cfg)
    _emit(args, json.dumps(mlp_to_dict(net)) + "\n", [args.data],
          {"loss_initial": losses[0], "loss_final": losses[-1]})


def cmd_estimate(args):
    net = load_mlp(args.model)
    pair = NormPair.parse(args.alpha, args.beta)
    domain = _domain(args, net.input_dim)
    cfg = EstimatorConfig(args.samples, pair, args.alg, k_divisions=args.k, c=args.c, t_m=args.tm, n0=args.n0,
                          seed=args.seed, sigma_mode=args.sigma_mode, threads=args.threads,
                          trace_every=args.trace_every)
    rep = estimate(net, domain, cfg)
    _emit(args, _dump(rep.to_dict()), [args.model] + ([args.domain] if args.domain else []))


def cmd_oracle(args):
    net = load_mlp(args.model)
    pair = NormPair.parse(args.alpha, args.beta)
    domain = _domain(args, net.input_dim)
    doc = {"mode": args.mode, "norm_pair": pair.to_json()}
    if args.mode == "grid":
        value, x = grid_oracle(net, domain, GridSpec(args.grid, args.jitter), pair, args.threads)
        doc.update(grid=args.grid, jitter=args.jitter)
    else:
        if net.input_dim != 1:
            raise ConfigError("breakpoint mode needs a model with one input")
        bps = enumerate_breakpoints(net, domain)
        value, x = breakpoint_oracle_1d(net, domain, pair)
        doc.update(breakpoint_count=len(bps), breakpoints=bps.tolist())
    doc.update(value=value, argmax=x.tolist())
    _emit(args, _dump(doc), [args.model] + ([args.domain] if args.domain else []))


def cmd_heatmap(args):
    net = load_mlp(args.model)
    if net.input_dim != 2:
        raise DimensionMismatch(f"heatmap needs a model with two inputs, got {net.input_dim}")
    pair = NormPair.parse(args.alpha, args.beta)
    domain = _domain(args, 2)
    GridSpec(args.grid)
    buf = io.StringIO()
    rows = write_heatmap(net, domain, args.grid, pair, buf)
    _emit(args, buf.getvalue(), [args.model], {"rows": rows})


def cmd_bench(args):
    suite = load_suite(args.suite)
    buf = io.StringIO()
    n = write_rows(run_suite(suite, threads=args.threads), buf)
    _emit(args, buf.getvalue(), [args.suite], {"rows": n})


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "estimate": cmd_estimate,
    "oracle": cmd_oracle,
    "heatmap": cmd_heatmap,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    args = parse_args(sys.argv[1:] if argv is None else argv)
    try:
        COMMANDS[args.command](args)
    except LipsampleError as exc:
        print(f"lipsample {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"lipsample {args.command}: cannot access {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
