"""Deterministic synthetic problem generators.

Every generator takes an explicit seed, uses numpy's default_rng, and draws
in a documented order (weights first, then calibration data), so the same
seed always reproduces the same problem byte for byte.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .io import write_bundle

DISTRIBUTIONS = ("gaussian", "correlated")


def gen_layer(m, n, samples, seed, dist="gaussian"):
    """One layer problem: (m, n) weights and (samples, m) calibration inputs.

    'gaussian' draws i.i.d. standard normal inputs; 'correlated' draws from
    a random covariance G.T @ G / m, which gives the Gram matrix a wide
    spectrum and makes the weight update genuinely iterative.
    """
    _check_dims(m, n, samples)
    if dist not in DISTRIBUTIONS:
        raise ValidationError(f"dist must be one of {DISTRIBUTIONS}, got {dist!r}")
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((m, n))
    if dist == "gaussian":
        x = rng.standard_normal((samples, m))
    else:
        g = rng.standard_normal((m, m))
        sigma = g.T @ g / m
        chol = np.linalg.cholesky(sigma)
        z = rng.standard_normal((samples, m))
        x = z @ chol.T
    return w, x


def gen_synthetic(directory, m, n, samples, seed, dist="gaussian"):
    """Generate a layer problem and write it as a bundle directory."""
    w, x = gen_layer(m, n, samples, seed, dist)
    name = f"{dist}_m{m}_n{n}_s{samples}_seed{seed}"
    return write_bundle(directory, name, w, x)


def gen_chain(dims, samples, seed):
    """Weights for a chain of layers plus the first layer's inputs.

    dims lists the layer widths, so len(dims) - 1 weight matrices are drawn
    after the (samples, dims[0]) input block.
    """
    if len(dims) < 2:
        raise ValidationError("a chain needs at least two widths")
    for d in dims:
        if d < 1:
            raise ValidationError("chain widths must be >= 1")
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    x0 = rng.standard_normal((samples, dims[0]))
    weights = [
        rng.standard_normal((dims[i], dims[i + 1])) for i in range(len(dims) - 1)
    ]
    return weights, x0


def _check_dims(m, n, samples):
    if m < 1 or n < 1:
        raise ValidationError("weight dimensions must be >= 1")
    if samples < 1:
        raise ValidationError("samples must be >= 1")
