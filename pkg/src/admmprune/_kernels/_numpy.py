"""Pure-numpy reference implementations of the hot kernels.

The compiled lane in ``_accel`` mirrors these element for element; keep the
per-element operation order in sync or the bitwise-equality contract breaks.
All matrix arguments are C-contiguous float64 (masks uint8) and outputs are
written in place.
"""

import numpy as np

NAME = "numpy"


def combined_scores(w, u, out):
    """out = |w + u|"""
    np.add(w, u, out=out)
    np.abs(out, out=out)


def row_scaled_scores(w, u, row_scale, out):
    """out = |w + u| * row_scale[i]"""
    np.add(w, u, out=out)
    np.abs(out, out=out)
    out *= row_scale[:, None]


def apply_mask_pair(w, u, mask, out):
    """out = (w + u) where mask is set, 0 elsewhere."""
    np.add(w, u, out=out)
    out[mask == 0] = 0.0


def iteration_update(w, u, mask, gram_w, rho, z_out, rhs_out):
    """One projection + dual update, leaving the solve to the caller.

    z = (w + u) masked; u <- (w + u) - z; rhs = gram_w + rho * (z - u).
    Mutates u; w is read-only.
    """
    np.add(w, u, out=z_out)
    z_out[mask == 0] = 0.0
    u += w
    u -= z_out
    np.subtract(z_out, u, out=rhs_out)
    rhs_out *= rho
    rhs_out += gram_w


def finalize(w, u, mask, inv_norms, out):
    """out = ((w + u) masked) * inv_norms[i]"""
    np.add(w, u, out=out)
    out[mask == 0] = 0.0
    out *= inv_norms[:, None]


def topk_prune(scores, count, mask_out):
    """Zero the `count` lowest-scoring positions; ties by flat index."""
    mask_out.fill(1)
    total = scores.size
    if count <= 0:
        return
    if count >= total:
        mask_out.fill(0)
        return
    order = np.argsort(scores.ravel(), kind="stable")
    mask_out.reshape(-1)[order[:count]] = 0


def structured_prune(scores, count, n_keep, m_group, mask_out):
    """Zero `count` entries outside the per-group top-n_keep protected set.

    Groups are m_group consecutive rows of one column.  Protection ties go
    to the higher flat index; pruning ties to the lower, matching a single
    ascending (score, flat index) order.
    """
    rows, cols = scores.shape
    groups = rows // m_group
    mask_out.fill(1)
    grouped = scores.reshape(groups, m_group, cols)
    order = np.argsort(grouped, axis=1, kind="stable")
    protected = np.zeros((groups, m_group, cols), dtype=bool)
    np.put_along_axis(protected, order[:, m_group - n_keep :, :], True, axis=1)
    if count <= 0:
        return
    candidates = np.flatnonzero(~protected.reshape(rows * cols))
    count = min(count, candidates.size)
    sub_order = np.argsort(scores.ravel()[candidates], kind="stable")
    mask_out.reshape(-1)[candidates[sub_order[:count]]] = 0
