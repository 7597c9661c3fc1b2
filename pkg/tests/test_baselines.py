import numpy as np
import pytest

from admmprune.baselines import (
    GdConfig,
    exact_masked_solve,
    masked_objective_gradient,
    run_fixed_mask_gd,
)
from admmprune.errors import (
    DivergenceError,
    ShapeError,
    SingularSystemError,
    ValidationError,
)
from admmprune.solver import (
    SolverConfig,
    damped_objective,
    scaled_problem,
    update_weights,
)

from conftest import rel_frobenius


def gaussian_problem(m, n, samples, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((m, n)), rng.standard_normal((samples, m))


def random_mask(shape, seed, keep=0.5):
    rng = np.random.default_rng(seed)
    return (rng.random(shape) < keep).astype(np.uint8)


def scaled_candidate_objective(w, x, cand, lam, eps):
    """Objective of an unscaled candidate, in the solver's coordinates."""
    w_scaled, gram_damped, norms = scaled_problem(w, x, lam, eps)
    return damped_objective(gram_damped, w_scaled, cand * norms[:, None])


class TestExactMaskedSolve:
    def test_keep_all_returns_weights_exactly(self):
        w, x = gaussian_problem(8, 4, 48, 0)
        mask = np.ones((8, 4), dtype=np.uint8)
        assert np.array_equal(exact_masked_solve(w, x, mask), w)

    def test_all_zero_mask(self):
        w, x = gaussian_problem(8, 4, 48, 1)
        mask = np.zeros((8, 4), dtype=np.uint8)
        assert np.array_equal(exact_masked_solve(w, x, mask), np.zeros((8, 4)))

    def test_support_is_exact(self):
        w, x = gaussian_problem(12, 6, 64, 2)
        mask = random_mask((12, 6), 3)
        out = exact_masked_solve(w, x, mask)
        assert (out[mask == 0] == 0.0).all()

    def test_restricted_normal_equations_residual(self):
        w, x = gaussian_problem(16, 4, 64, 4)
        mask = random_mask((16, 4), 5)
        lam, eps = 0.1, 1e-8
        out = exact_masked_solve(w, x, mask, lam=lam, eps=eps)
        w_scaled, gram_damped, norms = scaled_problem(w, x, lam, eps)
        for j in range(4):
            support = np.flatnonzero(mask[:, j])
            if support.size in (0, 16):
                continue
            v = out[support, j] * norms[support]
            lhs = gram_damped[np.ix_(support, support)] @ v
            rhs = gram_damped[support, :] @ w_scaled[:, j]
            assert np.linalg.norm(lhs - rhs) <= 1e-9 * np.linalg.norm(rhs)

    def test_beats_random_feasible_perturbations(self):
        w, x = gaussian_problem(16, 4, 64, 6)
        mask = random_mask((16, 4), 7)
        lam, eps = 0.1, 1e-8
        out = exact_masked_solve(w, x, mask, lam=lam, eps=eps)
        base = scaled_candidate_objective(w, x, out, lam, eps)
        rng = np.random.default_rng(8)
        for _ in range(100):
            delta = rng.standard_normal((16, 4)) * 10.0 ** rng.uniform(-3, 0)
            cand = out + np.where(mask != 0, delta, 0.0)
            assert scaled_candidate_objective(w, x, cand, lam, eps) >= base

    def test_singular_without_damping(self):
        # two bitwise-identical input features make the restricted system
        # exactly singular once both land in one column's support
        rng = np.random.default_rng(9)
        x = rng.standard_normal((32, 3))
        x[:, 1] = x[:, 0]
        w = rng.standard_normal((3, 2))
        mask = np.array([[1, 1], [1, 0], [0, 1]], dtype=np.uint8)
        with pytest.raises(SingularSystemError) as exc:
            exact_masked_solve(w, x, mask, lam=0.0, eps=0.0)
        assert "lambda" in str(exc.value)

    def test_damping_rescues_singular_system(self):
        rng = np.random.default_rng(10)
        x = rng.standard_normal((32, 3))
        x[:, 1] = x[:, 0]
        w = rng.standard_normal((3, 2))
        mask = np.array([[1, 1], [1, 0], [0, 1]], dtype=np.uint8)
        out = exact_masked_solve(w, x, mask, lam=0.1, eps=0.0)
        assert np.isfinite(out).all()

    def test_mask_shape_mismatch(self):
        w, x = gaussian_problem(4, 3, 16, 11)
        with pytest.raises(ShapeError):
            exact_masked_solve(w, x, np.ones((3, 4), dtype=np.uint8))


class TestMaskedGradient:
    def test_zero_at_reference(self):
        w, x = gaussian_problem(6, 3, 32, 20)
        w_scaled, gram_damped, _ = scaled_problem(w, x, 0.1, 0.0)
        mask = np.ones((6, 3), dtype=np.uint8)
        grad = masked_objective_gradient(w_scaled, w_scaled, mask, gram_damped)
        assert np.array_equal(grad, np.zeros_like(grad))

    def test_scalar_parabola(self):
        grad = masked_objective_gradient(
            np.array([[2.0]]), np.array([[0.0]]),
            np.array([[1]], dtype=np.uint8), np.array([[1.0]]),
        )
        assert np.array_equal(grad, [[-2.0]])

    def test_off_mask_entries_zero_exactly(self):
        w, x = gaussian_problem(10, 5, 48, 21)
        w_scaled, gram_damped, _ = scaled_problem(w, x, 0.1, 0.0)
        mask = random_mask((10, 5), 22)
        rng = np.random.default_rng(23)
        w_hat = rng.standard_normal((10, 5))
        grad = masked_objective_gradient(w_scaled, w_hat, mask, gram_damped)
        assert (grad[mask == 0] == 0.0).all()

    def test_matches_central_finite_differences(self):
        w, x = gaussian_problem(8, 3, 48, 24)
        lam = 0.1
        w_scaled, gram_damped, _ = scaled_problem(w, x, lam, 0.0)
        mask = random_mask((8, 3), 25)
        rng = np.random.default_rng(26)
        w_hat = rng.standard_normal((8, 3))
        grad = masked_objective_gradient(w_scaled, w_hat, mask, gram_damped)

        def half_objective(v):
            cand = np.where(mask != 0, v, 0.0)
            return 0.5 * damped_objective(gram_damped, w_scaled, cand)

        h = 1e-4
        fd = np.zeros_like(grad)
        for i in range(8):
            for j in range(3):
                up = w_hat.copy()
                dn = w_hat.copy()
                up[i, j] += h
                dn[i, j] -= h
                fd[i, j] = (half_objective(up) - half_objective(dn)) / (2 * h)
        denom = np.linalg.norm(grad)
        assert np.linalg.norm(fd - grad) <= 1e-5 * denom

    def test_shape_mismatches(self):
        g = np.eye(3)
        w = np.ones((3, 2))
        with pytest.raises(ShapeError):
            masked_objective_gradient(w, np.ones((2, 3)), np.ones((3, 2)), g)
        with pytest.raises(ShapeError):
            masked_objective_gradient(w, w, np.ones((3, 2)), np.eye(4))


class TestGdConfig:
    def test_validation(self):
        GdConfig(1e-3, 10).validate()
        with pytest.raises(ValidationError):
            GdConfig(0.0, 10).validate()
        with pytest.raises(ValidationError):
            GdConfig(1e-3, 0).validate()
        with pytest.raises(ValidationError):
            GdConfig(1e-3, 10, momentum=1.0).validate()
        with pytest.raises(ValidationError):
            GdConfig(1e-3, 10, beta1=0.0).validate()
        with pytest.raises(ValidationError):
            GdConfig(1e-3, 10, beta2=1.0).validate()
        with pytest.raises(ValidationError):
            GdConfig(1e-3, 10, eps_adam=0.0).validate()


class TestRunFixedMaskGd:
    def test_vanishing_lr_changes_nothing(self):
        w, x = gaussian_problem(10, 5, 64, 30)
        mask = random_mask((10, 5), 31)
        cfg = SolverConfig()
        initial = scaled_candidate_objective(
            w, x, np.where(mask != 0, w, 0.0), cfg.lam, cfg.eps
        )
        for variant in ("adam", "sgd_momentum"):
            _, report = run_fixed_mask_gd(
                w, x, mask, GdConfig(1e-30, 1), variant=variant, clock=None
            )
            assert abs(report.records[0].objective - initial) <= 1e-12 * initial

    def test_keep_all_adam_non_increasing_first_step(self):
        w, x = gaussian_problem(12, 6, 64, 32)
        mask = np.ones((12, 6), dtype=np.uint8)
        _, report = run_fixed_mask_gd(
            w, x, mask, GdConfig(1e-3, 1), variant="adam", clock=None
        )
        assert report.records[0].objective <= 0.0 + 1e-30

    def test_first_step_descends_from_masked_start(self):
        w, x = gaussian_problem(12, 6, 64, 33)
        mask = random_mask((12, 6), 34)
        cfg = SolverConfig()
        initial = scaled_candidate_objective(
            w, x, np.where(mask != 0, w, 0.0), cfg.lam, cfg.eps
        )
        for variant in ("adam", "sgd_momentum"):
            _, report = run_fixed_mask_gd(
                w, x, mask, GdConfig(1e-3, 1), variant=variant, clock=None
            )
            assert report.records[0].objective < initial

    def test_support_pinned_and_unscaled(self):
        w, x = gaussian_problem(10, 5, 64, 35)
        mask = random_mask((10, 5), 36)
        updated, report = run_fixed_mask_gd(
            w, x, mask, GdConfig(1e-3, 25), clock=None
        )
        assert (updated[mask == 0] == 0.0).all()
        assert len(report.records) == 25
        assert [r.iter for r in report.records] == list(range(1, 26))
        assert all(np.isfinite(r.objective) for r in report.records)
        report.validate()

    def test_trace_approaches_exact_solution(self):
        w, x = gaussian_problem(16, 8, 96, 37)
        mask = random_mask((16, 8), 38)
        cfg = SolverConfig()
        oracle = exact_masked_solve(w, x, mask, lam=cfg.lam, eps=cfg.eps)
        best = scaled_candidate_objective(w, x, oracle, cfg.lam, cfg.eps)
        _, report = run_fixed_mask_gd(
            w, x, mask, GdConfig(1e-2, 200), variant="adam", clock=None
        )
        trace = [r.objective for r in report.records]
        assert trace[-1] >= best  # oracle is a true lower bound
        assert trace[-1] - best < trace[0] - best  # and GD moves toward it

    def test_adam_at_100_steps_does_not_beat_admm_at_10(self):
        w, x = gaussian_problem(64, 32, 256, 39)
        mask = random_mask((64, 32), 40)
        cfg = SolverConfig(iterations=10, sparsify_steps=10)
        _, admm_report = update_weights(w, x, mask, cfg, clock=None)
        admm_obj = admm_report.final_objective
        best = np.inf
        for lr in (1e-4, 1e-3, 1e-2):
            try:
                _, rep = run_fixed_mask_gd(
                    w, x, mask, GdConfig(lr, 100), variant="adam", clock=None
                )
            except DivergenceError:
                continue
            best = min(best, rep.final_objective)
        assert best >= admm_obj

    def test_divergence_raises_with_step(self):
        w, x = gaussian_problem(16, 8, 96, 41)
        mask = random_mask((16, 8), 42)
        with pytest.raises(DivergenceError) as exc:
            run_fixed_mask_gd(
                w, x, mask, GdConfig(100.0, 50), variant="sgd_momentum", clock=None
            )
        assert exc.value.step >= 1
        assert "step" in str(exc.value)

    def test_unknown_variant(self):
        w, x = gaussian_problem(4, 3, 16, 43)
        with pytest.raises(ValidationError):
            run_fixed_mask_gd(
                w, x, np.ones((4, 3), dtype=np.uint8),
                GdConfig(1e-3, 1), variant="newton",
            )

    def test_mask_shape_mismatch(self):
        w, x = gaussian_problem(4, 3, 16, 44)
        with pytest.raises(ShapeError):
            run_fixed_mask_gd(
                w, x, np.ones((3, 4), dtype=np.uint8), GdConfig(1e-3, 1)
            )

    def test_deterministic_with_null_clock(self):
        w, x = gaussian_problem(10, 5, 64, 45)
        mask = random_mask((10, 5), 46)
        a_w, a_r = run_fixed_mask_gd(w, x, mask, GdConfig(1e-3, 10), clock=None)
        b_w, b_r = run_fixed_mask_gd(w, x, mask, GdConfig(1e-3, 10), clock=None)
        assert np.array_equal(a_w, b_w)
        assert a_r.records == b_r.records

    def test_report_config_echo(self):
        w, x = gaussian_problem(6, 3, 32, 47)
        mask = random_mask((6, 3), 48)
        _, report = run_fixed_mask_gd(
            w, x, mask, GdConfig(1e-3, 2), variant="sgd_momentum", clock=None
        )
        assert report.config["updater"] == "sgd_momentum"
        assert report.config["learning_rate"] == 1e-3
        assert report.config["steps"] == 2
