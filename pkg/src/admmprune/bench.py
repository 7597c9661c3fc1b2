"""Benchmark harnesses: updater comparisons, chain pruning, backend timing.

Every updater in a benchmark run is scored with the same metric - the
damped objective in the scaled coordinates - on the same fixed mask, so
rows are directly comparable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .baselines import DivergenceError, GdConfig, exact_masked_solve, run_fixed_mask_gd
from .errors import ShapeError, ValidationError
from .linalg import column_norms, frobenius_sq, matmul
from .masking import density, select_topk_mask, wanda_scores
from .solver import SolverConfig, damped_objective, prune_layer, scaled_problem, update_weights
from .synth import gen_layer

UPDATERS = ("admm", "adam", "sgd", "oracle")
ACTIVATIONS = ("none", "relu")

_GD_VARIANTS = {"adam": "adam", "sgd": "sgd_momentum"}


@dataclass(frozen=True)
class BenchSpec:
    """Grid of updater runs sharing per-seed problems and masks."""

    updaters: tuple = ("admm", "adam", "oracle")
    steps_grid: tuple = (1, 10, 20, 50, 100)
    lr_grid: tuple = (1e-4, 1e-3, 1e-2)
    seeds: tuple = (0,)
    m: int = 64
    n: int = 32
    samples: int = 256
    dist: str = "gaussian"
    sparsity: float = 0.5
    rho: float = 1.0
    lam: float = 0.1
    eps: float = 1e-8
    bundle: object = None

    def validate(self):
        if not self.updaters:
            raise ValidationError("updaters must be non-empty")
        for u in self.updaters:
            if u not in UPDATERS:
                raise ValidationError(f"unknown updater {u!r}; have {UPDATERS}")
        if not self.seeds:
            raise ValidationError("seeds must be non-empty")
        if not self.steps_grid or any(s < 1 for s in self.steps_grid):
            raise ValidationError("steps grid must be positive")
        if any(lr <= 0 for lr in self.lr_grid):
            raise ValidationError("learning rates must be positive")
        if not 0.0 <= self.sparsity <= 1.0:
            raise ValidationError("sparsity must be in [0, 1]")
        return self


def wanda_mask(w, x, sparsity, eps=1e-8):
    """The norm-weighted magnitude mask used as the fixed benchmark mask."""
    return select_topk_mask(wanda_scores(w, column_norms(x, eps)), sparsity)


def bench_objective(w, x, w_hat, lam=0.1, eps=1e-8):
    """The shared comparison metric: damped objective of w_hat against w."""
    w_scaled, gram_damped, norms = scaled_problem(w, x, lam, eps)
    return damped_objective(gram_damped, w_scaled, w_hat * norms[:, None])


def run_bench(spec, clock=time.perf_counter):
    """Run the benchmark grid; returns sorted row dicts.

    Columns: updater, lr (None for admm/oracle), steps (None for oracle),
    seed, seconds, objective.  A diverged gradient run records an infinite
    objective instead of aborting the grid.
    """
    spec.validate()
    tick = clock if clock is not None else _zero_clock
    rows = []
    for seed in spec.seeds:
        w, x = _bench_problem(spec, seed)
        mask = wanda_mask(w, x, spec.sparsity, spec.eps)
        # the oracle reference row is always present, listed or not
        t0 = tick()
        w_hat = exact_masked_solve(w, x, mask, lam=spec.lam, eps=spec.eps)
        seconds = tick() - t0
        rows.append(_row("oracle", None, None, seed, seconds,
                         bench_objective(w, x, w_hat, spec.lam, spec.eps)))
        for updater in spec.updaters:
            if updater == "oracle":
                continue
            if updater == "admm":
                for steps in spec.steps_grid:
                    config = SolverConfig(
                        rho=spec.rho, lam=spec.lam, eps=spec.eps,
                        iterations=steps, sparsify_steps=steps,
                        sparsity=spec.sparsity,
                    )
                    t0 = tick()
                    w_hat, _ = update_weights(w, x, mask, config, clock=None)
                    seconds = tick() - t0
                    rows.append(_row("admm", None, steps, seed, seconds,
                                     bench_objective(w, x, w_hat, spec.lam, spec.eps)))
            else:
                variant = _GD_VARIANTS[updater]
                solver_config = SolverConfig(
                    rho=spec.rho, lam=spec.lam, eps=spec.eps,
                    sparsity=spec.sparsity,
                )
                for steps in spec.steps_grid:
                    for lr in spec.lr_grid:
                        gd = GdConfig(learning_rate=lr, steps=steps)
                        t0 = tick()
                        try:
                            w_hat, _ = run_fixed_mask_gd(
                                w, x, mask, gd, variant=variant,
                                solver_config=solver_config, clock=None,
                            )
                            objective = bench_objective(
                                w, x, w_hat, spec.lam, spec.eps
                            )
                        except DivergenceError:
                            objective = float("inf")
                        seconds = tick() - t0
                        rows.append(_row(updater, lr, steps, seed, seconds, objective))
    rows.sort(key=_row_key)
    return rows


def _bench_problem(spec, seed):
    if spec.bundle is not None:
        w, x, _ = spec.bundle.load()
        return w, x
    return gen_layer(spec.m, spec.n, spec.samples, seed, spec.dist)


def _row(updater, lr, steps, seed, seconds, objective):
    return {
        "updater": updater,
        "lr": lr,
        "steps": steps,
        "seed": seed,
        "seconds": seconds,
        "objective": objective,
    }


def _row_key(row):
    return (
        row["updater"],
        -1.0 if row["lr"] is None else row["lr"],
        0 if row["steps"] is None else row["steps"],
        row["seed"],
    )


@dataclass
class ChainResult:
    reports: list = field(default_factory=list)
    masks: list = field(default_factory=list)
    pruned_weights: list = field(default_factory=list)
    dense_output: np.ndarray = None
    pruned_output: np.ndarray = None
    relative_error: float = 0.0


def run_chain(
    weights,
    x0,
    config,
    activation="none",
    dense_propagation=False,
    clock=time.perf_counter,
    names=None,
):
    """Prune a chain of layers, propagating activations between them.

    By default each layer is calibrated on the outputs of the already
    pruned layers before it; with dense_propagation=True every layer sees
    the activations of the original dense chain instead.  Returns a
    ChainResult with per-layer reports and the end-to-end relative error
    between the dense and pruned chain outputs.
    """
    if activation not in ACTIVATIONS:
        raise ValidationError(
            f"activation must be one of {ACTIVATIONS}, got {activation!r}"
        )
    if not weights:
        raise ValidationError("chain needs at least one layer")
    act = _activation_fn(activation)
    if x0.ndim != 2 or x0.shape[1] != weights[0].shape[0]:
        raise ShapeError("x0 columns must match the first layer's rows")
    for i in range(len(weights) - 1):
        if weights[i].shape[1] != weights[i + 1].shape[0]:
            raise ShapeError(
                f"layer {i} outputs {weights[i].shape[1]} features but layer "
                f"{i + 1} expects {weights[i + 1].shape[0]}"
            )
    if names is None:
        names = [f"layer{i}" for i in range(len(weights))]
    dense_inputs = [x0]
    cur = x0
    for w in weights:
        cur = act(matmul(cur, w))
        dense_inputs.append(cur)
    dense_output = dense_inputs[-1]
    result = ChainResult()
    cur = x0
    for i, w in enumerate(weights):
        calib = dense_inputs[i] if dense_propagation else cur
        w_pruned, mask, rep = prune_layer(w, calib, config, clock=clock, name=names[i])
        result.reports.append(rep)
        result.masks.append(mask)
        result.pruned_weights.append(w_pruned)
        cur = act(matmul(cur, w_pruned))
    result.dense_output = dense_output
    result.pruned_output = cur
    denom = frobenius_sq(dense_output)
    diff = frobenius_sq(dense_output - cur)
    result.relative_error = float(np.sqrt(diff / denom)) if denom > 0 else 0.0
    return result


def compare_backends(m=256, n=128, samples=512, seed=0, config=None, repeats=3):
    """Time prune_layer under every available kernel backend.

    Returns (rows, max_abs_diff): one row per backend with the best wall
    time over `repeats` runs, plus the largest absolute difference between
    the lanes' pruned weights (0.0 when they agree bitwise).
    """
    if config is None:
        config = SolverConfig()
    if repeats < 1:
        raise ValidationError("repeats must be >= 1")
    w, x = gen_layer(m, n, samples, seed)
    rows = []
    outputs = []
    for backend in _kernels.available():
        with _kernels.use(backend):
            best = float("inf")
            for _ in range(repeats):
                t0 = time.perf_counter()
                pruned, mask, rep = prune_layer(w, x, config, clock=None)
                best = min(best, time.perf_counter() - t0)
        outputs.append(pruned)
        rows.append(
            {
                "backend": backend,
                "seconds": best,
                "objective": rep.final_objective,
                "density": density(mask),
            }
        )
    max_diff = 0.0
    for other in outputs[1:]:
        max_diff = max(max_diff, float(np.abs(other - outputs[0]).max()))
    return rows, max_diff


def _activation_fn(name):
    if name == "relu":
        return lambda a: np.maximum(a, 0.0)
    return lambda a: a


def _zero_clock():
    return 0.0
