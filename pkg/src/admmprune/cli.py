"""Command-line interface.

Subcommands: gen, prune, bench, chain, schedule, oracle, backends.  All
output summaries are single-line key=value pairs on stdout.  Exit codes:
0 success, 2 validation or configuration error, 1 I/O error.  The global
`--timing off` flag records all seconds columns as 0.0 so repeated runs
produce byte-identical report files.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from .baselines import exact_masked_solve
from .bench import (
    BenchSpec,
    bench_objective,
    compare_backends,
    run_bench,
    run_chain,
    wanda_mask,
)
from .errors import ValidationError
from .io import (
    TensorIOError,
    config_from_mapping,
    load_bundle,
    load_config,
    parse_structure,
    read_mask,
    read_tensor,
    write_bench_csv,
    write_report,
    write_tensor,
)
from .masking import SparsitySchedule, cubic_sparsity, density
from .solver import SolverConfig, prune_layer
from .synth import gen_chain, gen_synthetic
from . import _kernels


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    clock = time.perf_counter if args.timing == "wall" else None
    handler = _HANDLERS[args.command]
    try:
        return handler(args, clock)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TensorIOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="admm-prune",
        description="Layer-wise pruning with ADMM weight updates.",
    )
    parser.add_argument(
        "--timing",
        choices=("wall", "off"),
        default="wall",
        help="'off' records 0.0 in all seconds columns for reproducible files",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic problem bundle")
    p.add_argument("--out", required=True, help="bundle directory to create")
    p.add_argument("--m", type=int, default=64)
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dist", choices=("gaussian", "correlated"), default="gaussian")

    p = sub.add_parser("prune", help="prune one layer")
    _add_problem_flags(p)
    _add_solver_flags(p)
    p.add_argument("--out", required=True, help="output path for the pruned tensor")
    p.add_argument("--report", help="optional report path")
    p.add_argument("--report-format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("bench", help="compare weight updaters on fixed masks")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--bundle", help="bundle directory (instead of generating)")
    p.add_argument("--updaters", default="admm,adam,oracle")
    p.add_argument("--steps-grid", default="1,10,20,50,100")
    p.add_argument("--lr-grid", default="1e-4,1e-3,1e-2")
    p.add_argument("--seeds", default="0:20", help="comma list or a:b range")
    p.add_argument("--m", type=int, default=64)
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--dist", choices=("gaussian", "correlated"), default="gaussian")
    p.add_argument("--sparsity", type=float, default=0.5)
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--eps", type=float, default=1e-8)

    p = sub.add_parser("chain", help="prune a chain of layers")
    p.add_argument("--weights", help="comma-separated tensor paths")
    p.add_argument("--input", help="calibration input tensor for the first layer")
    p.add_argument("--gen-dims", help="generate a chain with these widths, e.g. 64,48,32")
    p.add_argument("--samples", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--activation", choices=("none", "relu"), default="none")
    p.add_argument(
        "--dense-propagation",
        action="store_true",
        help="calibrate every layer on the dense chain's activations",
    )
    p.add_argument("--report-dir", help="directory for per-layer reports")
    _add_solver_flags(p)

    p = sub.add_parser("schedule", help="print the cubic sparsity schedule")
    p.add_argument("--sf", type=float, required=True, help="final sparsity")
    p.add_argument("--ks", type=int, required=True, help="sparsification steps")

    p = sub.add_parser("oracle", help="exact masked solve for a fixed mask")
    _add_problem_flags(p)
    p.add_argument("--mask", help="mask tensor path (default: top-k selection)")
    p.add_argument("--sparsity", type=float, default=0.5)
    p.add_argument("--lambda", dest="lam", type=float, default=0.1)
    p.add_argument("--eps", type=float, default=1e-8)
    p.add_argument("--out", required=True, help="output path for the solved tensor")

    p = sub.add_parser("backends", help="benchmark the kernel backends")
    p.add_argument("--m", type=int, default=256)
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--samples", type=int, default=512)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=3)
    _add_solver_flags(p)
    return parser


def _add_problem_flags(parser):
    parser.add_argument("--bundle", help="bundle directory with manifest.json")
    parser.add_argument("--weights", help="weight tensor path")
    parser.add_argument("--calib", help="calibration tensor path")


def _add_solver_flags(parser):
    parser.add_argument("--config", help="JSON solver config; flags override it")
    parser.add_argument("--sparsity", type=float, dest="cfg_sparsity")
    parser.add_argument("--iters", type=int, dest="cfg_iterations")
    parser.add_argument("--steps", type=int, dest="cfg_sparsify_steps")
    parser.add_argument("--rho", type=float, dest="cfg_rho")
    parser.add_argument("--lambda", type=float, dest="cfg_lam")
    parser.add_argument("--eps", type=float, dest="cfg_eps")
    parser.add_argument("--structured", dest="cfg_structured", help="N:M pattern, e.g. 2:4")
    parser.add_argument(
        "--mask-rule", dest="cfg_mask_rule", choices=("wanda_precond", "magnitude")
    )


def _solver_config(args):
    base = load_config(args.config) if args.config else SolverConfig()
    overrides = {}
    if args.cfg_sparsity is not None:
        overrides["sparsity"] = args.cfg_sparsity
    if args.cfg_iterations is not None:
        overrides["iterations"] = args.cfg_iterations
    if args.cfg_sparsify_steps is not None:
        overrides["sparsify_steps"] = args.cfg_sparsify_steps
    if args.cfg_rho is not None:
        overrides["rho"] = args.cfg_rho
    if args.cfg_lam is not None:
        overrides["lam"] = args.cfg_lam
    if args.cfg_eps is not None:
        overrides["eps"] = args.cfg_eps
    if args.cfg_structured is not None:
        overrides["structure"] = parse_structure(args.cfg_structured)
    if args.cfg_mask_rule is not None:
        overrides["mask_rule"] = args.cfg_mask_rule
    config = replace(base, **overrides)
    if config.structure is not None and "sparsity" not in overrides:
        if args.config is None or "sparsity" not in _raw_config_keys(args.config):
            config = replace(config, sparsity=config.structure.max_sparsity)
    return config.validate()


def _raw_config_keys(path):
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError):
        return ()
    return tuple(raw) if isinstance(raw, dict) else ()


def _load_problem(args):
    if args.bundle:
        bundle = load_bundle(args.bundle)
        w, x, _ = bundle.load()
        return w, x, bundle.name
    if not args.weights or not args.calib:
        raise ValidationError("provide --bundle or both --weights and --calib")
    return read_tensor(args.weights), read_tensor(args.calib), "layer"


def _mask_path_for(out):
    out = Path(out)
    if out.suffix:
        return out.with_name(out.stem + ".mask" + out.suffix)
    return out.with_name(out.name + ".mask")


def _kv(**pairs):
    print(" ".join(f"{k}={v}" for k, v in pairs.items()))


def cmd_gen(args, clock):
    bundle = gen_synthetic(args.out, args.m, args.n, args.samples, args.seed, args.dist)
    _kv(bundle=args.out, name=bundle.name, m=args.m, n=args.n, samples=args.samples)
    return 0


def cmd_prune(args, clock):
    w, x, name = _load_problem(args)
    config = _solver_config(args)
    pruned, mask, report = prune_layer(w, x, config, clock=clock, name=name)
    write_tensor(args.out, pruned)
    mask_path = _mask_path_for(args.out)
    write_tensor(mask_path, mask.astype("float64"))
    if args.report:
        write_report(args.report, report, fmt=args.report_format)
    _kv(
        layer=name,
        objective=repr(report.final_objective),
        density=repr(report.final_density),
        out=args.out,
        mask=mask_path,
    )
    return 0


def cmd_bench(args, clock):
    bundle = load_bundle(args.bundle) if args.bundle else None
    spec = BenchSpec(
        updaters=tuple(_split_list(args.updaters)),
        steps_grid=tuple(int(s) for s in _split_list(args.steps_grid)),
        lr_grid=tuple(float(s) for s in _split_list(args.lr_grid)),
        seeds=tuple(_parse_seeds(args.seeds)),
        m=args.m,
        n=args.n,
        samples=args.samples,
        dist=args.dist,
        sparsity=args.sparsity,
        rho=args.rho,
        lam=args.lam,
        eps=args.eps,
        bundle=bundle,
    )
    rows = run_bench(spec, clock=clock)
    write_bench_csv(args.out, rows)
    _kv(rows=len(rows), out=args.out)
    return 0


def cmd_chain(args, clock):
    if args.gen_dims:
        dims = [int(s) for s in _split_list(args.gen_dims)]
        weights, x0 = gen_chain(dims, args.samples, args.seed)
    else:
        if not args.weights or not args.input:
            raise ValidationError("provide --gen-dims or --weights and --input")
        weights = [read_tensor(p) for p in _split_list(args.weights)]
        x0 = read_tensor(args.input)
    config = _solver_config(args)
    result = run_chain(
        weights,
        x0,
        config,
        activation=args.activation,
        dense_propagation=args.dense_propagation,
        clock=clock,
    )
    if args.report_dir:
        report_dir = Path(args.report_dir)
        report_dir.mkdir(parents=True, exist_ok=True)
        for rep in result.reports:
            write_report(report_dir / f"{rep.layer}.json", rep, fmt="json")
        summary = {
            "relative_error": result.relative_error,
            "layers": [
                {"layer": rep.layer, "objective": rep.final_objective}
                for rep in result.reports
            ],
            "config": config.echo(),
            "activation": args.activation,
            "dense_propagation": bool(args.dense_propagation),
        }
        with open(report_dir / "chain.json", "w") as fh:
            json.dump(summary, fh, indent=2)
            fh.write("\n")
    _kv(
        layers=len(weights),
        relative_error=repr(result.relative_error),
        propagation="dense" if args.dense_propagation else "pruned",
    )
    return 0


def cmd_schedule(args, clock):
    schedule = SparsitySchedule(args.sf, args.ks)
    print("t,sparsity")
    for t in range(args.ks + 1):
        print(f"{t},{cubic_sparsity(t, schedule)!r}")
    return 0


def cmd_oracle(args, clock):
    w, x, name = _load_problem(args)
    if args.mask:
        mask = read_mask(args.mask)
    else:
        mask = wanda_mask(w, x, args.sparsity, args.eps)
    solved = exact_masked_solve(w, x, mask, lam=args.lam, eps=args.eps)
    write_tensor(args.out, solved)
    objective = bench_objective(w, x, solved, args.lam, args.eps)
    _kv(
        layer=name,
        objective=repr(objective),
        density=repr(density(mask)),
        out=args.out,
    )
    return 0


def cmd_backends(args, clock):
    config = _solver_config(args)
    rows, max_diff = compare_backends(
        m=args.m,
        n=args.n,
        samples=args.samples,
        seed=args.seed,
        config=config,
        repeats=args.repeats,
    )
    for row in rows:
        _kv(
            backend=row["backend"],
            seconds=repr(row["seconds"]),
            objective=repr(row["objective"]),
            density=repr(row["density"]),
        )
    _kv(active=_kernels.active().NAME, max_abs_diff=repr(max_diff))
    return 0


def _split_list(text):
    return [part for part in text.split(",") if part]


def _parse_seeds(text):
    if ":" in text:
        lo, hi = text.split(":", 1)
        try:
            lo, hi = int(lo), int(hi)
        except ValueError as exc:
            raise ValidationError(f"bad seed range {text!r}") from exc
        if hi <= lo:
            raise ValidationError("seed range must have a:b with b > a")
        return list(range(lo, hi))
    try:
        return [int(s) for s in _split_list(text)]
    except ValueError as exc:
        raise ValidationError(f"bad seed list {text!r}") from exc


_HANDLERS = {
    "gen": cmd_gen,
    "prune": cmd_prune,
    "bench": cmd_bench,
    "chain": cmd_chain,
    "schedule": cmd_schedule,
    "oracle": cmd_oracle,
    "backends": cmd_backends,
}


if __name__ == "__main__":
    sys.exit(main())
