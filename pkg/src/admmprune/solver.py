"""Preconditioned ADMM solver for layer-wise weight pruning.

The solver works on a scaled problem: weight rows and input columns are
scaled by the per-feature input norms so the damped Gram matrix has a unit
diagonal.  Each iteration projects onto the mask, updates the scaled dual,
and solves a ridge-regularized least-squares step against a Cholesky factor
computed once up front.  Masks are re-selected from |W + U| during the
sparsification phase following a cubic schedule, then frozen.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError, ShapeError, ValidationError
from .linalg import (
    SpdFactor,
    as_matrix,
    column_norms,
    frobenius_sq,
    gram,
    matmul,
    spd_factor,
    spd_solve,
)
from .masking import (
    SparsitySchedule,
    StructurePattern,
    cubic_sparsity,
    density,
    select_structured_mask,
    select_topk_mask,
)
from .report import IterationRecord, PruneReport

MASK_RULES = ("wanda_precond", "magnitude")


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for one pruning run.

    rho is the penalty weight of the splitting, lam the diagonal damping
    added to the Gram matrix, eps the guard added to input-feature norms.
    iterations is the total update count, sparsify_steps how many of those
    re-select the mask, sparsity the final pruned fraction.  structure, if
    set, switches to N:M structured selection (which pins sparsity to the
    pattern's ratio), and mask_rule picks the saliency used for selection.
    """

    rho: float = 1.0
    lam: float = 0.1
    eps: float = 1e-8
    iterations: int = 20
    sparsify_steps: int = 15
    sparsity: float = 0.5
    structure: StructurePattern | None = None
    mask_rule: str = "wanda_precond"

    def validate(self):
        if not self.rho > 0:
            raise ConfigError("rho must be > 0")
        if self.lam < 0:
            raise ConfigError("lambda must be >= 0")
        if self.eps < 0:
            raise ConfigError("eps must be >= 0")
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.sparsify_steps < 1:
            raise ConfigError("sparsify_steps must be >= 1")
        if self.sparsify_steps > self.iterations:
            raise ConfigError(
                f"sparsify_steps ({self.sparsify_steps}) cannot exceed "
                f"iterations ({self.iterations})"
            )
        if not 0.0 <= self.sparsity <= 1.0:
            raise ConfigError("sparsity must be in [0, 1]")
        if self.mask_rule not in MASK_RULES:
            raise ConfigError(
                f"mask_rule must be one of {MASK_RULES}, got {self.mask_rule!r}"
            )
        if self.structure is not None:
            if self.sparsity != self.structure.max_sparsity:
                raise ConfigError(
                    f"structured {self.structure} pruning requires sparsity "
                    f"{self.structure.max_sparsity}, got {self.sparsity}"
                )
        return self

    def echo(self):
        """Plain-dict form matching the JSON config keys."""
        return {
            "rho": self.rho,
            "lambda": self.lam,
            "eps": self.eps,
            "iterations": self.iterations,
            "sparsify_steps": self.sparsify_steps,
            "sparsity": self.sparsity,
            "structured": str(self.structure) if self.structure else None,
            "mask_rule": self.mask_rule,
        }


@dataclass(frozen=True)
class PreconditionedProblem:
    """Scaled problem data shared by every iteration of one run."""

    w_scaled: np.ndarray
    gram_damped: np.ndarray
    gram_w: np.ndarray
    solve_factor: SpdFactor
    norms: np.ndarray


@dataclass
class AdmmState:
    w: np.ndarray
    z: np.ndarray
    u: np.ndarray
    mask: np.ndarray
    step: int = 0


def scaled_problem(w, x, lam, eps):
    """Scale by input-feature norms; return (w_scaled, gram_damped, norms).

    The scaled Gram x_scaled.T @ x_scaled + lam*I has diagonal 1 + lam (for
    eps == 0), which is what makes plain magnitude selection on the scaled
    weights equivalent to norm-weighted selection on the originals.
    """
    w = as_matrix(w, "weights")
    x = as_matrix(x, "calibration inputs")
    if x.shape[1] != w.shape[0]:
        raise ShapeError(
            f"calibration features ({x.shape[1]}) must match weight rows "
            f"({w.shape[0]})"
        )
    norms = column_norms(x, eps)
    if not (norms > 0).all():
        raise ValidationError(
            "an input feature has zero norm; use eps > 0 to guard dead features"
        )
    w_scaled = np.ascontiguousarray(w * norms[:, None])
    x_scaled = x / norms[None, :]
    gram_damped = gram(x_scaled, lam)
    return w_scaled, gram_damped, norms


def precondition(w, x, config):
    """Build the per-run problem data: scaling, Gram products, and factor."""
    w_scaled, gram_damped, norms = scaled_problem(w, x, config.lam, config.eps)
    gram_w = np.ascontiguousarray(gram_damped @ w_scaled)
    shifted = gram_damped.copy()
    shifted[np.diag_indices_from(shifted)] += config.rho
    solve_factor = spd_factor(shifted)
    return PreconditionedProblem(
        w_scaled=w_scaled,
        gram_damped=gram_damped,
        gram_w=gram_w,
        solve_factor=solve_factor,
        norms=norms,
    )


def initial_state(problem):
    """Fresh state: scaled weights, zero dual, keep-all mask."""
    w = problem.w_scaled.copy()
    return AdmmState(
        w=w,
        z=np.zeros_like(w),
        u=np.zeros_like(w),
        mask=np.ones(w.shape, dtype=np.uint8),
        step=0,
    )


def admm_iteration(state, problem, config, new_mask=None):
    """One solver step; pure with respect to `state`.

    If new_mask is given it replaces state.mask before the projection.
    Returns the next AdmmState.
    """
    mask = state.mask if new_mask is None else new_mask
    if mask.shape != state.w.shape:
        raise ShapeError("mask shape must match the weight shape")
    mask = np.ascontiguousarray(mask, dtype=np.uint8)
    u = state.u.copy()
    z = np.empty_like(state.w)
    rhs = np.empty_like(state.w)
    _kernels.active().iteration_update(
        state.w, u, mask, problem.gram_w, config.rho, z, rhs
    )
    w = spd_solve(problem.solve_factor, rhs)
    return AdmmState(w=w, z=z, u=u, mask=mask, step=state.step + 1)


def damped_objective(gram_damped, reference_scaled, candidate_scaled):
    """Quadratic objective d.T G d summed over columns, d = candidate - reference.

    All arguments live in the scaled coordinates.  This is the one objective
    definition shared by the solver trace, the exact baseline, and the
    benchmark comparisons.
    """
    d = candidate_scaled - reference_scaled
    return max(float(np.vdot(d, gram_damped @ d)), 0.0)


def prune_layer(w, x, config, clock=time.perf_counter, name="layer"):
    """Prune one layer: gradual mask selection plus ADMM weight updates.

    Parameters
    ----------
    w : (m, n) array
        Dense weights, one output per column.
    x : (N, m) array
        Calibration inputs, one sample per row.
    config : SolverConfig
    clock : callable or None
        Time source for the per-iteration trace; None records zeros, which
        keeps report files byte-identical across runs.
    name : str
        Layer label for the report.

    Returns (pruned_weights, mask, report).
    """
    config.validate()
    kernels = _kernels.active()
    tick = clock if clock is not None else _zero_clock
    start = tick()
    problem = precondition(w, x, config)
    rows, cols = problem.w_scaled.shape
    if config.structure is not None and rows % config.structure.m_group != 0:
        raise ShapeError(
            f"row count {rows} is not divisible by group size "
            f"{config.structure.m_group}"
        )
    schedule = SparsitySchedule(config.sparsity, config.sparsify_steps)
    w_cur = problem.w_scaled.copy()
    u = np.zeros_like(w_cur)
    z = np.empty_like(w_cur)
    rhs = np.empty_like(w_cur)
    scores = np.empty_like(w_cur)
    mask = np.ones((rows, cols), dtype=np.uint8)
    inv_norms = np.ascontiguousarray(1.0 / problem.norms)
    records = []
    target = 0.0
    for step in range(1, config.iterations + 1):
        if step <= config.sparsify_steps:
            target = cubic_sparsity(step, schedule)
            if config.mask_rule == "magnitude":
                kernels.row_scaled_scores(w_cur, u, inv_norms, scores)
            else:
                kernels.combined_scores(w_cur, u, scores)
            if config.structure is None:
                mask = select_topk_mask(scores, target)
            else:
                mask = select_structured_mask(scores, target, config.structure)
        kernels.iteration_update(w_cur, u, mask, problem.gram_w, config.rho, z, rhs)
        w_cur = spd_solve(problem.solve_factor, rhs)
        kernels.apply_mask_pair(w_cur, u, mask, z)  # feasible snapshot
        objective = damped_objective(problem.gram_damped, problem.w_scaled, z)
        records.append(
            IterationRecord(
                iter=step,
                seconds=tick() - start,
                objective=objective,
                sparsity=target,
            )
        )
    pruned = np.empty_like(w_cur)
    kernels.finalize(w_cur, u, mask, inv_norms, pruned)
    report = PruneReport(
        layer=name,
        records=records,
        final_objective=records[-1].objective,
        final_density=density(mask),
        config=config.echo(),
    )
    return pruned, mask, report


def update_weights(w, x, mask, config, clock=time.perf_counter, name="layer"):
    """ADMM weight updates under a fixed mask.

    Same iteration as prune_layer without the selection phase.  Returns
    (updated_weights, report).
    """
    config.validate()
    kernels = _kernels.active()
    tick = clock if clock is not None else _zero_clock
    start = tick()
    problem = precondition(w, x, config)
    mask = _conforming_mask(mask, problem.w_scaled.shape)
    w_cur = problem.w_scaled.copy()
    u = np.zeros_like(w_cur)
    z = np.empty_like(w_cur)
    rhs = np.empty_like(w_cur)
    inv_norms = np.ascontiguousarray(1.0 / problem.norms)
    pruned_fraction = 1.0 - density(mask)
    records = []
    for step in range(1, config.iterations + 1):
        kernels.iteration_update(w_cur, u, mask, problem.gram_w, config.rho, z, rhs)
        w_cur = spd_solve(problem.solve_factor, rhs)
        kernels.apply_mask_pair(w_cur, u, mask, z)
        objective = damped_objective(problem.gram_damped, problem.w_scaled, z)
        records.append(
            IterationRecord(
                iter=step,
                seconds=tick() - start,
                objective=objective,
                sparsity=pruned_fraction,
            )
        )
    updated = np.empty_like(w_cur)
    kernels.finalize(w_cur, u, mask, inv_norms, updated)
    report = PruneReport(
        layer=name,
        records=records,
        final_objective=records[-1].objective,
        final_density=density(mask),
        config=config.echo(),
    )
    return updated, report


def reconstruction_error(x, w_ref, w_hat):
    """Squared Frobenius distance between x @ w_ref and x @ w_hat."""
    if w_ref.shape != w_hat.shape:
        raise ShapeError(
            f"weight shapes differ: {w_ref.shape} vs {w_hat.shape}"
        )
    return frobenius_sq(matmul(x, w_ref) - matmul(x, w_hat))


def _conforming_mask(mask, shape):
    mask = np.ascontiguousarray(mask, dtype=np.uint8)
    if mask.shape != shape:
        raise ShapeError(f"mask shape {mask.shape} must match weights {shape}")
    if mask.max(initial=0) > 1:
        raise ValidationError("mask entries must be 0 or 1")
    return mask


def _zero_clock():
    return 0.0
