"""Backend selection for the solver's hot kernels.

Two lanes implement the same elementwise contract: a compiled Cython
extension (used when importable) and a pure-numpy fallback.  Every kernel
performs the same per-element operations in the same order, so the lanes
produce bitwise-identical outputs.  Set ADMMPRUNE_BACKEND=numpy|cython to
force a lane, or use :func:`use` to switch temporarily.
"""

from __future__ import annotations

import contextlib
import os

from . import _numpy

_BACKENDS = {"numpy": _numpy}

try:
    from . import _accel

    _BACKENDS["cython"] = _accel
except ImportError:  # extension not built
    _accel = None

_requested = os.environ.get("ADMMPRUNE_BACKEND")
if _requested:
    if _requested not in _BACKENDS:
        raise ImportError(
            f"ADMMPRUNE_BACKEND={_requested!r} is not available; "
            f"choose from {sorted(_BACKENDS)}"
        )
    _active = _BACKENDS[_requested]
else:
    _active = _BACKENDS.get("cython", _numpy)


def active():
    """The module implementing the kernel contract for this process."""
    return _active


def available():
    """Names of the importable backends."""
    return sorted(_BACKENDS)


def get(name):
    if name not in _BACKENDS:
        raise KeyError(f"unknown backend {name!r}; have {sorted(_BACKENDS)}")
    return _BACKENDS[name]


@contextlib.contextmanager
def use(name):
    """Temporarily switch the active backend."""
    global _active
    previous = _active
    _active = get(name)
    try:
        yield _active
    finally:
        _active = previous
