import numpy as np
import pytest

from fdmkit import fixtures
from fdmkit.geometry import Box
from fdmkit.problems import (ErmProblem, LassoBoxProblem, QuadraticProblem,
                             SvmDualProblem, check_coord_strong_convexity,
                             global_lipschitz_bound, lasso_lift,
                             lasso_project_back)
from oracles import fd_gradient, grid_min_2d, svm_dual_batch


def _random_feasible(p, rng):
    lo = np.where(np.isinf(p.box.lower), -3.0, p.box.lower)
    hi = np.where(np.isinf(p.box.upper), 3.0, p.box.upper)
    return rng.uniform(lo, hi)


# ---------------------------------------------------------------------------
# shared oracle contracts


@pytest.mark.parametrize("name", ["svm_dual_n4", "lasso_d5", "erm_logistic_n20",
                                  "quadratic_box_n8", "quadratic_diag_n5"])
def test_gradient_matches_finite_differences(name, standard_problems, rng):
    p = standard_problems[name]
    for _ in range(5):
        x = _random_feasible(p, rng)
        g = p.gradient(x)
        g_fd = fd_gradient(p.value, x)
        np.testing.assert_allclose(g, g_fd, rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("name", ["svm_dual_n4", "lasso_d5", "erm_logistic_n20",
                                  "quadratic_box_n8"])
def test_coord_gradient_consistent_with_gradient(name, standard_problems, rng):
    p = standard_problems[name]
    for _ in range(10):
        x = _random_feasible(p, rng)
        i = int(rng.integers(p.n))
        assert p.coord_gradient(x, i) == pytest.approx(p.gradient(x)[i],
                                                       rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("name", ["svm_dual_n4", "lasso_d5", "erm_logistic_n20",
                                  "quadratic_box_n8", "quadratic_diag_n5"])
def test_coordinate_lipschitz_constants_hold(name, standard_problems, rng):
    # |grad_i f(x) - grad_i f(x + d e_i)| <= L_i |d| on sampled points
    p = standard_problems[name]
    for _ in range(40):
        x = _random_feasible(p, rng)
        i = int(rng.integers(p.n))
        lo, hi = p.box.lower[i], p.box.upper[i]
        d = rng.uniform(-1.0, 1.0)
        if np.isfinite(lo) or np.isfinite(hi):
            d = np.clip(x[i] + d, lo, hi) - x[i]
        x2 = x.copy()
        x2[i] += d
        change = abs(p.coord_gradient(x2, i) - p.coord_gradient(x, i))
        assert change <= p.lipschitz[i] * abs(d) + 1e-10


@pytest.mark.parametrize("name", ["svm_dual_n4", "lasso_d5", "erm_logistic_n20",
                                  "quadratic_box_n8"])
def test_state_cache_matches_direct_oracles(name, standard_problems, rng):
    p = standard_problems[name]
    x = _random_feasible(p, rng)
    st = p.start_state(x)
    for _ in range(50):
        i = int(rng.integers(p.n))
        new = float(np.clip(st.x[i] + rng.uniform(-0.4, 0.4),
                            p.box.lower[i], p.box.upper[i]))
        st.set_coord(i, new)
    assert st.objective() == pytest.approx(p.value(st.x), rel=1e-10, abs=1e-12)
    i = int(rng.integers(p.n))
    assert st.coord_grad(i) == pytest.approx(p.coord_gradient(st.x, i),
                                             rel=1e-9, abs=1e-12)
    np.testing.assert_allclose(st.gradient(), p.gradient(st.x),
                               rtol=1e-9, atol=1e-12)


# ---------------------------------------------------------------------------
# SVM dual


class TestSvmDual:
    def test_value_zero_point(self):
        p = fixtures.svm_dual_toy(n=4, d=4)
        assert p.value(np.zeros(4)) == 0.0

    def test_value_scalar_instance(self):
        p = SvmDualProblem(np.array([[1.0]]), np.array([1.0]), lam=1.0)
        assert p.value(np.array([1.0])) == pytest.approx(-0.5)

    def test_infeasible_point_rejected(self):
        p = fixtures.svm_dual_toy(n=4, d=4)
        with pytest.raises(ValueError):
            p.value(np.array([0.0, 1.5, 0.0, 0.0]))

    def test_lipschitz_formula(self):
        p = fixtures.svm_dual_tiny()
        row_sq = (p.features**2).sum(axis=1)
        np.testing.assert_allclose(p.lipschitz, row_sq / (p.lam * p.n**2))

    def test_minimizer_matches_grid_oracle(self):
        p = fixtures.svm_dual_tiny()
        x_star, f_star = grid_min_2d(svm_dual_batch(p), 0.0, 1.0, resolution=1e-3)
        st = p.start_state(x_star.copy())
        for _ in range(200):
            for i in range(2):
                st.set_coord(i, st.exact_coord_min(i))
        assert st.objective() <= f_star + 1e-9
        assert f_star - st.objective() < 1e-5

    def test_q_matrix_psd(self, rng):
        p = fixtures.svm_dual_toy(n=8, d=10)
        for _ in range(100):
            z = rng.standard_normal(p.n)
            quad = float(z @ (p.ya @ (p.ya.T @ z)))
            assert quad >= -1e-10

    def test_convex_along_random_segments(self, rng):
        p = fixtures.svm_dual_toy(n=4, d=4)
        for _ in range(50):
            a = rng.uniform(0, 1, 4)
            b = rng.uniform(0, 1, 4)
            t = rng.uniform()
            mid = p.value(t * a + (1 - t) * b)
            assert mid <= t * p.value(a) + (1 - t) * p.value(b) + 1e-12

    def test_primal_from_dual_zero(self):
        p = fixtures.svm_dual_toy(n=4, d=4)
        np.testing.assert_array_equal(p.primal_weights(np.zeros(4)),
                                      np.zeros(p.d))

    def test_primal_from_dual_scalar_case(self):
        p = SvmDualProblem(np.array([[2.0, 0.0]]), np.array([1.0]), lam=1.0)
        np.testing.assert_allclose(p.primal_weights(np.array([1.0])),
                                   np.array([2.0, 0.0]))

    def test_primal_from_dual_matches_matvec(self, rng):
        p = fixtures.svm_dual_toy(n=8, d=10)
        for _ in range(20):
            x = rng.uniform(0, 1, p.n)
            expected = (p.features * p.labels[:, None]).T @ x / (p.lam * p.n)
            np.testing.assert_allclose(p.primal_weights(x), expected,
                                       rtol=1e-12, atol=1e-14)

    def test_gap_at_zero_is_one(self):
        # hinge loss at the zero weight vector is 1 per point; f(0) = 0
        for n, d in [(4, 4), (8, 10)]:
            p = fixtures.svm_dual_toy(n=n, d=d)
            assert p.duality_gap(np.zeros(n)) == pytest.approx(1.0)

    def test_gap_small_at_grid_optimum(self):
        p = fixtures.svm_dual_tiny()
        x_star, _ = grid_min_2d(svm_dual_batch(p), 0.0, 1.0, resolution=1e-3)
        assert p.duality_gap(x_star) <= 1e-6

    def test_gap_dominates_suboptimality(self, rng):
        # weak duality: G(x) >= f(x) - f*
        p = fixtures.svm_dual_tiny()
        _, f_star = grid_min_2d(svm_dual_batch(p), 0.0, 1.0, resolution=1e-3)
        for _ in range(50):
            x = rng.uniform(0, 1, 2)
            assert p.duality_gap(x) >= p.value(x) - f_star - 1e-9

    def test_gap_nonnegative_along_trace(self, rng):
        p = fixtures.svm_dual_toy(n=8, d=10)
        x = rng.uniform(0, 1, p.n)
        st = p.start_state(x)
        for _ in range(100):
            i = int(rng.integers(p.n))
            st.set_coord(i, st.exact_coord_min(i))
            assert st.duality_gap() >= -1e-10

    def test_zero_rows_rejected(self):
        with pytest.raises(ValueError):
            SvmDualProblem(np.array([[0.0, 0.0], [1.0, 0.0]]),
                           np.array([1.0, -1.0]), lam=1.0)

    def test_bad_labels_rejected(self):
        with pytest.raises(ValueError):
            SvmDualProblem(np.eye(2), np.array([1.0, 2.0]), lam=1.0)


# ---------------------------------------------------------------------------
# lasso lift


class TestLassoLift:
    def test_lift_example(self):
        z = lasso_lift(np.array([1.0, -2.0]))
        assert z.tolist() == [1.0, 0.0, 0.0, 2.0]

    def test_lift_zero(self):
        assert lasso_lift(np.zeros(3)).tolist() == [0.0] * 6

    def test_round_trip_identity(self, rng):
        for _ in range(50):
            x = rng.standard_normal(5)
            np.testing.assert_array_equal(lasso_project_back(lasso_lift(x)), x)

    def test_back_projection_rejects_negative_entries(self):
        with pytest.raises(ValueError):
            lasso_project_back(np.array([1.0, -0.5, 0.0, 0.0]))

    def test_back_projection_rejects_odd_length(self):
        with pytest.raises(ValueError):
            lasso_project_back(np.array([1.0, 0.0, 2.0]))

    def test_lifted_objective_agrees_with_original(self, rng):
        p = fixtures.lasso_small()
        for _ in range(50):
            x = rng.standard_normal(p.d_orig)
            lifted = p.value(lasso_lift(x))
            assert lifted == pytest.approx(p.inner_value(x), rel=1e-12,
                                           abs=1e-12)

    def test_lift_value_dominated_by_general_splits(self, rng):
        # any feasible split of v into positive parts pays at least as much
        p = fixtures.lasso_small()
        for _ in range(20):
            x = rng.standard_normal(p.d_orig)
            slack = rng.uniform(0, 1, p.d_orig)
            z = lasso_lift(x)
            z_slack = z + np.tile(slack, 2)
            assert p.value(z_slack) >= p.value(z) - 1e-12

    def test_zero_design_column_rejected(self):
        A = np.array([[1.0, 0.0], [2.0, 0.0]])
        with pytest.raises(ValueError):
            LassoBoxProblem(A, np.array([1.0, 1.0]), l1=0.1)


# ---------------------------------------------------------------------------
# ERM losses


class TestErm:
    @pytest.mark.parametrize("loss", ["logistic", "squared", "squared_hinge"])
    def test_losses_run_and_match_fd(self, loss, rng):
        ds_points = rng.standard_normal((12, 5))
        labels = np.where(rng.standard_normal(12) > 0, 1.0, -1.0)
        p = ErmProblem(ds_points, labels, lam=0.3, loss=loss)
        x = rng.standard_normal(5)
        np.testing.assert_allclose(p.gradient(x), fd_gradient(p.value, x),
                                   rtol=1e-5, atol=1e-6)

    def test_squared_loss_allows_real_labels(self, rng):
        p = ErmProblem(rng.standard_normal((6, 3)), rng.standard_normal(6),
                       lam=0.1, loss="squared")
        assert np.isfinite(p.value(np.zeros(3)))

    def test_logistic_requires_binary_labels(self, rng):
        with pytest.raises(ValueError):
            ErmProblem(rng.standard_normal((6, 3)), rng.standard_normal(6),
                       lam=0.1, loss="logistic")

    def test_unknown_loss_rejected(self, rng):
        with pytest.raises(ValueError):
            ErmProblem(np.eye(3), np.ones(3), lam=0.1, loss="hinge")

    def test_logistic_stable_at_extreme_margins(self):
        p = ErmProblem(np.array([[100.0], [-100.0]]), np.array([1.0, -1.0]),
                       lam=0.1, loss="logistic")
        v = p.value(np.array([50.0]))
        assert np.isfinite(v)
        assert np.isfinite(p.coord_gradient(np.array([50.0]), 0))

    def test_squared_hinge_lipschitz_documented_formula(self, rng):
        A = rng.standard_normal((9, 4))
        y = np.where(rng.standard_normal(9) > 0, 1.0, -1.0)
        lam = 0.2
        p = ErmProblem(A, y, lam=lam, loss="squared_hinge")
        np.testing.assert_allclose(p.lipschitz,
                                   2.0 * (A**2).sum(axis=0) / 9 + lam)


# ---------------------------------------------------------------------------
# coordinate strong convexity


class TestCoordStrongConvexity:
    def test_quadratic_exact_curvature(self):
        L = np.array([1.0, 2.0, 3.0])
        p = QuadraticProblem(np.diag(L), np.zeros(3), Box.free(3))
        ok, witness = check_coord_strong_convexity(p, 0.5, L, samples=300)
        assert ok and witness is None

    def test_svm_dual_half_with_lipschitz_weights(self):
        p = fixtures.svm_dual_toy(n=4, d=4)
        ok, _ = check_coord_strong_convexity(p, 0.5, p.lipschitz, samples=300)
        assert ok

    def test_too_large_gamma_yields_witness(self):
        p = QuadraticProblem(np.array([[2.0]]), np.zeros(1), Box.free(1))
        ok, witness = check_coord_strong_convexity(p, 1.5, np.ones(1),
                                                   samples=200)
        assert not ok
        assert witness is not None and "lhs" in witness

    def test_gamma_accessor_matches_curvature_floor(self):
        p = fixtures.erm_logistic()
        w = p.lipschitz
        assert p.gamma(w) == pytest.approx(p.lam / (2 * w.max()))
        ok, _ = check_coord_strong_convexity(p, p.gamma(w), w, samples=200)
        assert ok


# ---------------------------------------------------------------------------
# global Lipschitz bound


class TestGlobalLipschitzBound:
    def test_w_equal_l_gives_n(self):
        L = np.array([0.5, 1.5, 7.0])
        assert global_lipschitz_bound(L, L) == pytest.approx(3.0)

    def test_direct_sum(self):
        assert global_lipschitz_bound([1.0, 2.0], [1.0, 1.0]) == pytest.approx(3.0)

    def test_bounds_true_constant_for_separable_quadratic(self):
        from fdmkit.rates import quadratic_lipschitz_w
        L = np.array([1.0, 2.0, 5.0])
        p = QuadraticProblem(np.diag(L), np.zeros(3), Box.free(3))
        true_l = quadratic_lipschitz_w(p, L)
        assert true_l == pytest.approx(1.0, rel=1e-6)
        assert true_l <= global_lipschitz_bound(L, L) + 1e-9
