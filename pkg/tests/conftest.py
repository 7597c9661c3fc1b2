"""Shared fixtures plus the acceptance-summary reporter.

Acceptance tests register one line per criterion; the terminal-summary hook
prints them after the run so the pass/fail ledger is visible regardless of
output capturing.
"""

import numpy as np
import pytest

from admmprune import gen_layer, wanda_mask

ACCEPTANCE_LINES = []


def record_criterion(number, name, ok, detail):
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'} {name}: {detail}"
    ACCEPTANCE_LINES.append((number, line))
    return ok


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


@pytest.fixture
def small_problem():
    """A 16x8 layer with 64 calibration samples and its 50% mask."""
    w, x = gen_layer(16, 8, 64, 123)
    mask = wanda_mask(w, x, 0.5)
    return w, x, mask


def rel_frobenius(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))
