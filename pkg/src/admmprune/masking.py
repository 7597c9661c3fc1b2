"""Mask selection: saliency scores, top-k and N:M structured pruning, and
the cubic sparsification schedule.

Masks are uint8 arrays of 0/1 with the shape of the weight matrix.  Ties in
the selection rules are broken by flat row-major index: among equal scores,
lower indices are pruned first, and within a structured group the protected
slots go to the higher indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ShapeError, ValidationError


@dataclass(frozen=True)
class SparsitySchedule:
    """Gradual schedule reaching final_sparsity after `steps` mask updates."""

    final_sparsity: float
    steps: int

    def __post_init__(self):
        if not 0.0 <= self.final_sparsity <= 1.0:
            raise ValidationError("final sparsity must be in [0, 1]")
        if self.steps < 1:
            raise ValidationError("schedule steps must be >= 1")


@dataclass(frozen=True)
class StructurePattern:
    """Keep n_keep entries in every group of m_group consecutive rows."""

    n_keep: int
    m_group: int

    def __post_init__(self):
        if not 0 < self.n_keep < self.m_group:
            raise ValidationError(
                "structure pattern requires 0 < n_keep < m_group"
            )

    @property
    def max_sparsity(self):
        return 1.0 - self.n_keep / self.m_group

    def __str__(self):
        return f"{self.n_keep}:{self.m_group}"


def cubic_sparsity(t, schedule):
    """Sparsity target at step t: s_f * (t / steps)**3, clamped past the end."""
    if t < 0:
        raise ValidationError("step must be >= 0")
    if t >= schedule.steps:
        return schedule.final_sparsity
    return schedule.final_sparsity * (t / schedule.steps) ** 3


def prune_count(sparsity, total):
    """Number of entries to prune, rounding halves away from zero."""
    if not 0.0 <= sparsity <= 1.0:
        raise ValidationError("sparsity must be in [0, 1]")
    return min(total, int(math.floor(sparsity * total + 0.5)))


def wanda_scores(w, input_norms):
    """Saliency |w_ij| * norm_i of the i-th input feature."""
    norms = np.asarray(input_norms, dtype=np.float64)
    if norms.ndim != 1 or norms.shape[0] != w.shape[0]:
        raise ShapeError("input_norms length must equal the weight row count")
    if not (norms > 0).all():
        raise ValidationError("input norms must be positive")
    return np.abs(w) * norms[:, None]


def select_topk_mask(scores, sparsity):
    """Unstructured mask keeping the highest-scoring entries of the layer."""
    scores = _score_matrix(scores)
    count = prune_count(sparsity, scores.size)
    mask = np.empty(scores.shape, dtype=np.uint8)
    _kernels.active().topk_prune(scores, count, mask)
    return mask


def select_structured_mask(scores, s_t, pattern):
    """Mask for N:M structured pruning at intermediate sparsity s_t.

    The top n_keep entries of every group of m_group consecutive rows are
    protected; the pruning budget m_group/(m_group - n_keep) * s_t * |union|
    is then removed from the union of unprotected entries, lowest scores
    first.  At s_t == pattern.max_sparsity the result is an exact N:M mask.
    """
    scores = _score_matrix(scores)
    rows, cols = scores.shape
    if rows % pattern.m_group != 0:
        raise ShapeError(
            f"row count {rows} is not divisible by group size {pattern.m_group}"
        )
    if not 0.0 <= s_t <= pattern.max_sparsity:
        raise ValidationError(
            f"structured sparsity {s_t} exceeds the {pattern} limit "
            f"{pattern.max_sparsity}"
        )
    groups = rows // pattern.m_group
    union = scores.size - groups * pattern.n_keep * cols
    multiplier = pattern.m_group / (pattern.m_group - pattern.n_keep)
    count = min(union, int(math.floor(multiplier * s_t * union + 0.5)))
    mask = np.empty(scores.shape, dtype=np.uint8)
    _kernels.active().structured_prune(
        scores, count, pattern.n_keep, pattern.m_group, mask
    )
    return mask


def density(mask):
    """Fraction of kept entries."""
    return float(int(mask.sum()) / mask.size)


def apply_mask(mask, w):
    """Zero the pruned entries of w."""
    if mask.shape != w.shape:
        raise ShapeError(f"shape mismatch: {mask.shape} vs {w.shape}")
    return np.where(mask != 0, w, 0.0)


def _score_matrix(scores):
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    if scores.ndim != 2:
        raise ShapeError("scores must be 2-D")
    return scores
