"""Bitwise equality between the compiled and pure-numpy kernel lanes.

Every kernel must produce bit-for-bit identical outputs in both lanes; the
solver's determinism guarantees rest on it.  Comparisons use array_equal on
raw float64 values, never tolerances.
"""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from admmprune import _kernels

HAS_CYTHON = "cython" in _kernels.available()
needs_cython = pytest.mark.skipif(not HAS_CYTHON, reason="compiled lane not built")


def _case(seed, rows=7, cols=5):
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((rows, cols))
    u = rng.standard_normal((rows, cols))
    mask = (rng.random((rows, cols)) > 0.4).astype(np.uint8)
    return w, u, mask, rng


def _both(name):
    return _kernels.get("numpy"), _kernels.get(name)


@needs_cython
class TestLaneEquality:
    def test_combined_scores(self):
        w, u, _, _ = _case(0)
        ref, acc = _both("cython")
        a = np.empty_like(w)
        b = np.empty_like(w)
        ref.combined_scores(w, u, a)
        acc.combined_scores(w, u, b)
        assert np.array_equal(a, b)

    def test_row_scaled_scores(self):
        w, u, _, rng = _case(1)
        scale = rng.random(w.shape[0]) + 0.25
        ref, acc = _both("cython")
        a = np.empty_like(w)
        b = np.empty_like(w)
        ref.row_scaled_scores(w, u, scale, a)
        acc.row_scaled_scores(w, u, scale, b)
        assert np.array_equal(a, b)

    def test_apply_mask_pair(self):
        w, u, mask, _ = _case(2)
        ref, acc = _both("cython")
        a = np.empty_like(w)
        b = np.empty_like(w)
        ref.apply_mask_pair(w, u, mask, a)
        acc.apply_mask_pair(w, u, mask, b)
        assert np.array_equal(a, b)
        assert (a[mask == 0] == 0.0).all()

    def test_iteration_update(self):
        w, u, mask, rng = _case(3)
        gram_w = rng.standard_normal(w.shape)
        rho = 1.25
        ref, acc = _both("cython")
        u_a = u.copy()
        u_b = u.copy()
        z_a = np.empty_like(w)
        z_b = np.empty_like(w)
        r_a = np.empty_like(w)
        r_b = np.empty_like(w)
        ref.iteration_update(w, u_a, mask, gram_w, rho, z_a, r_a)
        acc.iteration_update(w, u_b, mask, gram_w, rho, z_b, r_b)
        assert np.array_equal(z_a, z_b)
        assert np.array_equal(u_a, u_b)
        assert np.array_equal(r_a, r_b)

    def test_finalize(self):
        w, u, mask, rng = _case(4)
        inv = 1.0 / (rng.random(w.shape[0]) + 0.5)
        ref, acc = _both("cython")
        a = np.empty_like(w)
        b = np.empty_like(w)
        ref.finalize(w, u, mask, inv, a)
        acc.finalize(w, u, mask, inv, b)
        assert np.array_equal(a, b)

    @given(st.integers(0, 2**32 - 1), st.integers(0, 36), st.booleans())
    @settings(max_examples=60, deadline=None)
    def test_topk_prune(self, seed, count, quantize):
        rng = np.random.default_rng(seed)
        scores = rng.random((6, 6))
        if quantize:  # exercise the tie paths
            scores = np.floor(scores * 4.0)
        ref, acc = _both("cython")
        a = np.empty(scores.shape, dtype=np.uint8)
        b = np.empty(scores.shape, dtype=np.uint8)
        ref.topk_prune(scores, count, a)
        acc.topk_prune(scores, count, b)
        assert np.array_equal(a, b)
        assert int((a == 0).sum()) == min(count, scores.size)

    @given(
        st.integers(0, 2**32 - 1),
        st.integers(1, 3),
        st.integers(1, 4),
        st.integers(0, 24),
        st.booleans(),
    )
    @settings(max_examples=60, deadline=None)
    def test_structured_prune(self, seed, groups, cols, count, quantize):
        rng = np.random.default_rng(seed)
        scores = rng.random((groups * 4, cols))
        if quantize:
            scores = np.floor(scores * 4.0)
        ref, acc = _both("cython")
        a = np.empty(scores.shape, dtype=np.uint8)
        b = np.empty(scores.shape, dtype=np.uint8)
        ref.structured_prune(scores, count, 2, 4, a)
        acc.structured_prune(scores, count, 2, 4, b)
        assert np.array_equal(a, b)
        per_group = a.reshape(groups, 4, cols).sum(axis=1)
        assert (per_group >= 2).all()

    @given(st.integers(0, 2**32 - 1), st.integers(1, 9), st.integers(1, 9))
    @settings(max_examples=40, deadline=None)
    def test_elementwise_kernels_random_shapes(self, seed, rows, cols):
        rng = np.random.default_rng(seed)
        w = rng.standard_normal((rows, cols))
        u = rng.standard_normal((rows, cols))
        mask = (rng.random((rows, cols)) > 0.5).astype(np.uint8)
        gram_w = rng.standard_normal((rows, cols))
        scale = rng.random(rows) + 0.1
        ref, acc = _both("cython")
        for run in (ref, acc):
            out = np.empty_like(w)
            run.row_scaled_scores(w, u, scale, out)
            u_c = u.copy()
            z = np.empty_like(w)
            rhs = np.empty_like(w)
            run.iteration_update(w, u_c, mask, gram_w, 0.75, z, rhs)
            fin = np.empty_like(w)
            run.finalize(w, u_c, mask, scale, fin)
            if run is ref:
                saved = (out.copy(), u_c.copy(), z.copy(), rhs.copy(), fin.copy())
        assert np.array_equal(saved[0], out)
        assert np.array_equal(saved[1], u_c)
        assert np.array_equal(saved[2], z)
        assert np.array_equal(saved[3], rhs)
        assert np.array_equal(saved[4], fin)


class TestNumpyLaneSemantics:
    """Value-level checks pinned on the reference lane alone."""

    def test_iteration_update_identities(self):
        w, u, mask, rng = _case(5)
        gram_w = rng.standard_normal(w.shape)
        u_c = u.copy()
        z = np.empty_like(w)
        rhs = np.empty_like(w)
        _kernels.get("numpy").iteration_update(w, u_c, mask, gram_w, 2.0, z, rhs)
        s = w + u
        z_want = np.where(mask != 0, s, 0.0)
        assert np.array_equal(z, z_want)
        assert np.allclose(u_c, s - z_want)
        assert np.allclose(rhs, gram_w + 2.0 * (z_want - u_c))
        # feasibility: z is exactly zero on pruned entries
        assert (z[mask == 0] == 0.0).all()

    def test_topk_count_zero_keeps_all(self):
        mask = np.empty((3, 3), dtype=np.uint8)
        _kernels.get("numpy").topk_prune(np.ones((3, 3)), 0, mask)
        assert mask.all()

    def test_topk_count_total_prunes_all(self):
        mask = np.empty((3, 3), dtype=np.uint8)
        _kernels.get("numpy").topk_prune(np.ones((3, 3)), 9, mask)
        assert not mask.any()


class TestBackendRegistry:
    def test_numpy_always_available(self):
        assert "numpy" in _kernels.available()

    def test_get_unknown_raises(self):
        with pytest.raises(KeyError):
            _kernels.get("fortran")

    def test_use_switches_and_restores(self):
        before = _kernels.active()
        with _kernels.use("numpy") as lane:
            assert lane.NAME == "numpy"
            assert _kernels.active() is lane
        assert _kernels.active() is before

    def test_use_restores_after_exception(self):
        before = _kernels.active()
        with pytest.raises(RuntimeError):
            with _kernels.use("numpy"):
                raise RuntimeError("boom")
        assert _kernels.active() is before

    def test_env_override_numpy(self):
        env = dict(os.environ, ADMMPRUNE_BACKEND="numpy")
        out = subprocess.run(
            [sys.executable, "-c",
             "from admmprune import _kernels; print(_kernels.active().NAME)"],
            env=env, capture_output=True, text=True,
        )
        assert out.returncode == 0
        assert out.stdout.strip() == "numpy"

    def test_env_override_unknown_fails(self):
        env = dict(os.environ, ADMMPRUNE_BACKEND="gpu")
        out = subprocess.run(
            [sys.executable, "-c", "import admmprune"],
            env=env, capture_output=True, text=True,
        )
        assert out.returncode != 0
        assert "ADMMPRUNE_BACKEND" in out.stderr

    @needs_cython
    def test_lane_names(self):
        assert _kernels.get("cython").NAME == "cython"
        assert _kernels.get("numpy").NAME == "numpy"
