"""Dense float64 linear algebra for the pruning solver.

Everything operates on 2-D C-contiguous float64 arrays ("matrices").  BLAS
and LAPACK do the heavy lifting; results are reproducible for a fixed build
and thread count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve
from scipy.linalg.lapack import dpotrf

from .errors import NotSpdError, ShapeError, ValidationError

SYMMETRY_RTOL = 1e-9


def as_matrix(a, name="matrix"):
    """Coerce to a 2-D C-contiguous float64 array with finite entries."""
    out = np.ascontiguousarray(a, dtype=np.float64)
    if out.ndim != 2 or out.shape[0] < 1 or out.shape[1] < 1:
        raise ShapeError(f"{name} must be 2-D with at least one row and column")
    if not np.isfinite(out).all():
        raise ValidationError(f"{name} contains non-finite entries")
    return out


def matmul(a, b):
    """Matrix product a @ b with shape validation."""
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError("matmul expects 2-D operands")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"inner dimensions differ: {a.shape[1]} vs {b.shape[0]}"
        )
    return a @ b


def gram(x, lam=0.0):
    """Damped Gram matrix x.T @ x + lam * I, symmetrized exactly.

    The product is averaged with its transpose so the result is symmetric
    bit for bit, which the Cholesky path relies on.
    """
    if lam < 0:
        raise ValidationError("lam must be >= 0")
    if x.ndim != 2:
        raise ShapeError("gram expects a 2-D operand")
    g = x.T @ x
    g = (g + g.T) * 0.5
    if lam:
        g[np.diag_indices_from(g)] += lam
    return np.ascontiguousarray(g)


@dataclass(frozen=True)
class SpdFactor:
    """Cholesky factor of a symmetric positive-definite matrix."""

    dimension: int
    chol: np.ndarray
    lower: bool = True


def spd_factor(a):
    """Factor a symmetric positive-definite matrix for repeated solves.

    Raises NotSpdError (with the failing pivot index, 1-based) when the
    matrix is not positive definite, and ShapeError when it is not square
    or not symmetric to within 1e-9 relative.
    """
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError("spd_factor expects a square matrix")
    scale = np.abs(a).max()
    if scale > 0 and np.abs(a - a.T).max() > SYMMETRY_RTOL * scale:
        raise ShapeError("matrix is not symmetric within 1e-9 relative")
    c, info = dpotrf(a, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise NotSpdError(int(info))
    if info < 0:
        raise ValidationError(f"illegal value in factorization argument {-info}")
    return SpdFactor(dimension=a.shape[0], chol=c, lower=True)


def spd_solve(factor, b):
    """Solve A @ x = b given the factor of A.  b may be a vector or matrix."""
    if b.shape[0] != factor.dimension:
        raise ShapeError(
            f"right-hand side has {b.shape[0]} rows, factor expects {factor.dimension}"
        )
    x = cho_solve((factor.chol, factor.lower), b, check_finite=False)
    return np.ascontiguousarray(x)


def column_norms(x, eps=0.0):
    """Euclidean norm of each column of x, plus eps."""
    if x.ndim != 2:
        raise ShapeError("column_norms expects a 2-D operand")
    if eps < 0:
        raise ValidationError("eps must be >= 0")
    return np.sqrt(np.einsum("ij,ij->j", x, x)) + eps


def frobenius_sq(a):
    """Sum of squared entries."""
    return float(np.vdot(a, a))


def hadamard(a, b):
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def add(a, b):
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a + b


def sub(a, b):
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a - b


def scale_rows(a, v):
    """Multiply row i of a by v[i]."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != a.shape[0]:
        raise ShapeError("row scale vector length must equal the row count")
    return a * v[:, None]
