"""Fixed-mask weight-update baselines.

``exact_masked_solve`` treats every output column as an independent masked
ridge regression and solves its restricted normal equations directly; it is
the reference the iterative updaters are measured against.
``run_fixed_mask_gd`` is projected full-batch gradient descent on the same
damped objective, with SGD-momentum and Adam step rules.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import (
    DivergenceError,
    NotSpdError,
    ShapeError,
    SingularSystemError,
    ValidationError,
)
from .linalg import as_matrix, spd_factor, spd_solve
from .report import IterationRecord, PruneReport
from .solver import damped_objective, scaled_problem

VARIANTS = ("sgd_momentum", "adam")

DIVERGENCE_FACTOR = 1e12


@dataclass(frozen=True)
class GdConfig:
    learning_rate: float
    steps: int
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8

    def validate(self):
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate must be > 0")
        if self.steps < 1:
            raise ValidationError("steps must be >= 1")
        if not 0.0 <= self.momentum < 1.0:
            raise ValidationError("momentum must be in [0, 1)")
        if not 0.0 < self.beta1 < 1.0 or not 0.0 < self.beta2 < 1.0:
            raise ValidationError("beta1 and beta2 must be in (0, 1)")
        if not self.eps_adam > 0:
            raise ValidationError("eps_adam must be > 0")
        return self


def exact_masked_solve(w, x, mask, lam=0.1, eps=1e-8):
    """Optimal masked weights, one restricted solve per output column.

    For column j with support S, solves G[S, S] v = G[S, :] w_j in the
    scaled coordinates (G the damped scaled Gram) and scatters v back.
    Full-support columns pass through unchanged; empty columns are zero.
    Raises SingularSystemError when lam == 0 leaves a singular restricted
    system.
    """
    w = as_matrix(w, "weights")
    mask = np.asarray(mask)
    if mask.shape != w.shape:
        raise ShapeError(f"mask shape {mask.shape} must match weights {w.shape}")
    w_scaled, gram_damped, norms = scaled_problem(w, x, lam, eps)
    out = np.zeros_like(w)
    for j in range(w.shape[1]):
        support = np.flatnonzero(mask[:, j])
        if support.size == 0:
            continue
        if support.size == w.shape[0]:
            out[:, j] = w[:, j]
            continue
        sub = gram_damped[np.ix_(support, support)]
        rhs = gram_damped[support, :] @ w_scaled[:, j]
        try:
            factor = spd_factor(sub)
        except NotSpdError as exc:
            raise SingularSystemError(
                f"restricted normal equations are singular for output column "
                f"{j}; use lambda > 0"
            ) from exc
        v = spd_solve(factor, rhs)
        out[support, j] = v / norms[support]
    return out


def masked_objective_gradient(w, w_hat, mask, gram_damped):
    """Gradient of the damped objective at w_hat, restricted to the mask.

    Computes (gram_damped @ (mask*w_hat - w)) zeroed outside the mask.  All
    arrays share the weight shape and live in the same coordinates.
    """
    if w.shape != w_hat.shape or mask.shape != w.shape:
        raise ShapeError("w, w_hat, and mask must share one shape")
    if gram_damped.shape != (w.shape[0], w.shape[0]):
        raise ShapeError("gram matrix must be rows x rows")
    masked = np.where(mask != 0, w_hat, 0.0)
    grad = gram_damped @ (masked - w)
    grad[mask == 0] = 0.0
    return grad


def run_fixed_mask_gd(
    w,
    x,
    mask,
    gd_config,
    variant="adam",
    solver_config=None,
    clock=time.perf_counter,
    name="layer",
):
    """Projected full-batch gradient descent on the damped objective.

    Starts from the masked scaled weights, keeps pruned coordinates pinned
    at zero, and records the objective after every step.  The damping and
    norm guard come from solver_config (defaults when omitted), so the
    updater optimizes the same objective the solver does.  Raises
    DivergenceError when the objective exceeds 1e12x its starting value.
    Returns (updated_weights, report).
    """
    gd_config.validate()
    if variant not in VARIANTS:
        raise ValidationError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if solver_config is None:
        from .solver import SolverConfig

        solver_config = SolverConfig()
    lam, eps = solver_config.lam, solver_config.eps
    tick = clock if clock is not None else _zero_clock
    start = tick()
    w = as_matrix(w, "weights")
    mask = np.asarray(mask)
    if mask.shape != w.shape:
        raise ShapeError(f"mask shape {mask.shape} must match weights {w.shape}")
    w_scaled, gram_damped, norms = scaled_problem(w, x, lam, eps)
    pruned = mask == 0
    v = np.where(pruned, 0.0, w_scaled)
    initial = damped_objective(gram_damped, w_scaled, v)
    limit = DIVERGENCE_FACTOR * max(initial, 1e-300)
    velocity = np.zeros_like(v)
    m_buf = np.zeros_like(v)
    v_buf = np.zeros_like(v)
    pruned_fraction = float(pruned.sum() / pruned.size)
    records = []
    for step in range(1, gd_config.steps + 1):
        grad = masked_objective_gradient(w_scaled, v, mask, gram_damped)
        if variant == "sgd_momentum":
            velocity *= gd_config.momentum
            velocity += grad
            v -= gd_config.learning_rate * velocity
        else:
            m_buf *= gd_config.beta1
            m_buf += (1.0 - gd_config.beta1) * grad
            v_buf *= gd_config.beta2
            v_buf += (1.0 - gd_config.beta2) * grad * grad
            m_hat = m_buf / (1.0 - gd_config.beta1**step)
            v_hat = v_buf / (1.0 - gd_config.beta2**step)
            v -= gd_config.learning_rate * m_hat / (np.sqrt(v_hat) + gd_config.eps_adam)
        v[pruned] = 0.0
        objective = damped_objective(gram_damped, w_scaled, v)
        records.append(
            IterationRecord(
                iter=step,
                seconds=tick() - start,
                objective=objective,
                sparsity=pruned_fraction,
            )
        )
        if not objective <= limit:  # catches NaN as well as overflow
            raise DivergenceError(step, objective)
    updated = v / norms[:, None]
    config = {
        "updater": variant,
        "learning_rate": gd_config.learning_rate,
        "steps": gd_config.steps,
        "lambda": lam,
        "eps": eps,
    }
    report = PruneReport(
        layer=name,
        records=records,
        final_objective=records[-1].objective,
        final_density=1.0 - pruned_fraction,
        config=config,
    )
    return updated, report


def _zero_clock():
    return 0.0
