import numpy as np
import pytest

from lrk.krylov import (
    FactorizationError, arnoldi_step, gkb_step, gmres, gram_solve, lr_fgmres, lr_flsqr, lsqr,
    projected_tikhonov, rs_lr_gmres, start_arnoldi, start_gkb,
)
from lrk.linops import dense_operator, gaussian_blur_operator
from lrk.lowrank import numerical_rank, truncate
from lrk.models import LambdaRule, StoppingRule, StopReason
from lrk.nnr import SolverError

STEPS = 30


def _blur16():
    return gaussian_blur_operator(16, 1.5, 6)


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


def _check_arnoldi(op, b, precondition=None):
    state = start_arnoldi(b, capacity=4)
    for _ in range(STEPS):
        arnoldi_step(state, op, precondition)
    assert not state.breakdown
    Z, V, H = state.solution_basis, state.basis, state.hessenberg
    AZ = np.column_stack([op.matvec(z) for z in Z.T])
    assert _rel(V @ H, AZ) < 1e-8
    assert np.linalg.norm(V.T @ V - np.eye(V.shape[1])) < 1e-8
    return state


def _check_gkb(op, b, precondition=None):
    state = start_gkb(op, b, capacity=4)
    for _ in range(STEPS):
        gkb_step(state, op, precondition)
    assert not state.breakdown
    U, V, Z = state.U.matrix, state.V.matrix, state.solution_basis
    AZ = np.column_stack([op.matvec(z) for z in Z.T])
    AtU = np.column_stack([op.rmatvec(u) for u in U.T])
    assert _rel(U @ state.M, AZ) < 1e-8
    assert _rel(V @ state.T, AtU) < 1e-8
    assert np.linalg.norm(U.T @ U - np.eye(U.shape[1])) < 1e-8
    assert np.linalg.norm(V.T @ V - np.eye(V.shape[1])) < 1e-8
    return state


class TestFactorizations:
    def test_arnoldi_dense(self, dense_random, rng):
        _check_arnoldi(dense_random, rng.standard_normal(400))

    def test_arnoldi_blur(self, rng):
        state = _check_arnoldi(_blur16(), rng.standard_normal(256))
        assert not state.flexible
        assert np.allclose(state.solution_basis, state.basis[:, :STEPS])

    def test_flexible_arnoldi(self, dense_random, rng):
        state = _check_arnoldi(dense_random, rng.standard_normal(400), lambda v: truncate(v, 3))
        assert state.flexible

    def test_flexible_arnoldi_matches_dense_recursion(self, dense_random, rng):
        """Переобуславливатель меняется на каждом шаге: z_i = τ_{κ_i}(v_i)."""
        A = dense_random.to_dense()
        b = rng.standard_normal(400)
        ranks = [1, 3, 2, 5, 4, 2, 6, 3]
        steps = len(ranks)

        V = np.zeros((400, steps + 1))
        Z = np.zeros((400, steps))
        H = np.zeros((steps + 1, steps))
        V[:, 0] = b / np.linalg.norm(b)
        for i, kappa in enumerate(ranks):
            Z[:, i] = truncate(V[:, i], kappa)
            w = A @ Z[:, i]
            for j in range(i + 1):
                H[j, i] = V[:, j] @ w
                w = w - H[j, i] * V[:, j]
            H[i + 1, i] = np.linalg.norm(w)
            V[:, i + 1] = w / H[i + 1, i]

        state = start_arnoldi(b, capacity=steps)
        for kappa in ranks:
            arnoldi_step(state, dense_random, lambda v, kappa=kappa: truncate(v, kappa))
        assert _rel(state.solution_basis, Z) < 1e-8
        assert _rel(state.basis, V) < 1e-8
        assert _rel(state.hessenberg, H) < 1e-8

    def test_gkb_dense(self, dense_random, rng):
        _check_gkb(dense_random, rng.standard_normal(400))

    def test_gkb_blur(self, rng):
        state = _check_gkb(_blur16(), rng.standard_normal(256))
        # без переобуславливания M нижняя бидиагональная
        assert np.allclose(np.triu(state.M, 1), 0.0)
        assert np.allclose(np.tril(state.M, -2), 0.0)

    def test_flexible_gkb(self, dense_random, rng):
        _check_gkb(dense_random, rng.standard_normal(400), lambda v: truncate(v, 4))

    def test_zero_start(self, dense_random):
        with pytest.raises(FactorizationError):
            start_arnoldi(np.zeros(400))
        with pytest.raises(FactorizationError):
            start_gkb(dense_random, np.zeros(400))

    def test_arnoldi_requires_square(self, rng):
        op = dense_operator(rng.standard_normal((6, 4)))
        state = start_arnoldi(rng.standard_normal(6))
        with pytest.raises(FactorizationError):
            arnoldi_step(state, op)

    def test_breakdown_on_invariant_subspace(self):
        op = dense_operator(np.diag([1.0, 2.0, 3.0, 4.0]))
        state = start_arnoldi(np.array([1.0, 1.0, 0.0, 0.0]))
        arnoldi_step(state, op)
        arnoldi_step(state, op)
        assert state.breakdown
        assert state.H[-1, -1] == 0.0
        with pytest.raises(FactorizationError):
            arnoldi_step(state, op)


class TestProjectedTikhonov:
    def test_unregularized(self, rng):
        H = rng.standard_normal((6, 5))
        y, residual = projected_tikhonov(H, 2.0)
        rhs = np.zeros(6)
        rhs[0] = 2.0
        expected = np.linalg.lstsq(H, rhs, rcond=None)[0]
        assert np.allclose(y, expected)
        assert residual == pytest.approx(np.linalg.norm(H @ expected - rhs))

    def test_regularized_normal_equations(self, rng):
        H = rng.standard_normal((6, 5))
        y, _ = projected_tikhonov(H, 1.5, 0.3)
        rhs = np.zeros(6)
        rhs[0] = 1.5
        expected = np.linalg.solve(H.T @ H + 0.3 * np.eye(5), H.T @ rhs)
        assert np.allclose(y, expected)

    def test_edge_cases(self):
        y, residual = projected_tikhonov(np.zeros((1, 0)), -3.0)
        assert y.size == 0 and residual == 3.0
        with pytest.raises(FactorizationError):
            projected_tikhonov(np.ones((2, 1)), 1.0, -1.0)


class TestSolvers:
    def test_gmres_full_dimension(self, dense8, rng):
        x_true = rng.standard_normal(64)
        b = dense8.matvec(x_true)
        report = gmres(dense8, b, StoppingRule(max_iter=64), x_exact=x_true)
        assert _rel(report.final_x, x_true) < 1e-8
        assert report.min_rel_error < 1e-8

    def test_lsqr_rectangular(self, rng):
        matrix = rng.standard_normal((30, 16))
        b = rng.standard_normal(30)
        report = lsqr(dense_operator(matrix), b, StoppingRule(max_iter=16))
        expected = np.linalg.lstsq(matrix, b, rcond=None)[0]
        assert _rel(report.final_x, expected) < 1e-8

    @pytest.mark.parametrize('solver', [gmres, lsqr])
    def test_projected_residual_is_true_residual(self, solver, star16):
        report = solver(star16.op, star16.b, StoppingRule(max_iter=40), track_true_residual=True)
        assert report.projected_identity
        for record in report.iterations:
            assert abs(record.residual - record.true_residual) <= 1e-8

    def test_gmres_residual_monotone(self, star16):
        report = gmres(star16.op, star16.b, StoppingRule(max_iter=30))
        residuals = [r.residual for r in report.iterations]
        assert all(b <= a + 1e-12 for a, b in zip(residuals, residuals[1:]))

    def test_gmres_discrepancy(self, star16):
        stop = StoppingRule(max_iter=100, epsilon=star16.epsilon, theta=1.01, use_discrepancy=True)
        report = gmres(star16.op, star16.b, stop, x_exact=star16.x_exact)
        assert report.stop_reason is StopReason.DISCREPANCY
        assert report.final_residual <= 1.01 * star16.epsilon
        assert len(report.iterations) < 100

    def test_fixed_lambda_recorded(self, star16):
        report = lsqr(star16.op, star16.b, StoppingRule(max_iter=5), LambdaRule.fixed(1e-3))
        assert all(r.lambda_hat == 1e-3 for r in report.iterations)

    def test_gmres_requires_square(self, rng):
        with pytest.raises(FactorizationError):
            gmres(dense_operator(rng.standard_normal((20, 16))), rng.standard_normal(20))

    @pytest.mark.parametrize('solver', [lr_fgmres, lr_flsqr])
    def test_low_rank_guarantee(self, solver, star16):
        report = solver(star16.op, star16.b, 2, 2, StoppingRule(max_iter=20), keep_iterates=True)
        assert not report.projected_identity
        for x in report.iterates:
            assert numerical_rank(x) <= 2

    @pytest.mark.parametrize('flexible, standard', [(lr_fgmres, gmres), (lr_flsqr, lsqr)])
    def test_full_rank_degenerates(self, flexible, standard, star16):
        stop = StoppingRule(max_iter=10)
        low_rank = flexible(star16.op, star16.b, 16, 16, stop, keep_iterates=True)
        plain = standard(star16.op, star16.b, stop, keep_iterates=True)
        for a, b in zip(low_rank.iterates, plain.iterates):
            assert _rel(a, b) < 1e-8

    def test_rank_arguments(self, star16):
        with pytest.raises(FactorizationError):
            lr_fgmres(star16.op, star16.b, 0, 2)
        with pytest.raises(FactorizationError):
            lr_flsqr(star16.op, star16.b, 2, 17)

    def test_optimal_rule_needs_orthonormal_basis(self, star16):
        with pytest.raises(SolverError):
            lr_fgmres(star16.op, star16.b, 2, 2, lambda_rule=LambdaRule('optimal'), x_exact=star16.x_exact)


class TestRestartedLowRank:
    def test_full_rank_converges(self, dense8, rng):
        x_true = rng.standard_normal(64)
        b = dense8.matvec(x_true)
        report = rs_lr_gmres(dense8, b, restart_len=64, truncation_rank=8, max_outer=1)
        assert report.final_residual <= 1e-6 * np.linalg.norm(b)

    def test_full_rank_single_cycle_is_gmres(self, dense8, rng):
        b = rng.standard_normal(64)
        restarted = rs_lr_gmres(dense8, b, restart_len=8, truncation_rank=8, max_outer=1, keep_iterates=True)
        plain = gmres(dense8, b, StoppingRule(max_iter=8), keep_iterates=True)
        assert len(restarted.iterates) == 8
        for a, expected in zip(restarted.iterates, plain.iterates):
            assert _rel(a, expected) < 1e-8

    def test_rank_and_true_residual(self, star16):
        report = rs_lr_gmres(
            star16.op, star16.b, restart_len=10, truncation_rank=2, max_outer=3,
            x_exact=star16.x_exact, keep_iterates=True,
        )
        assert not report.projected_identity
        assert len(report.iterations) == 30
        assert len(report.spectra) == 3
        assert {r.outer for r in report.iterations} == {1, 2, 3}
        for record, x in zip(report.iterations, report.iterates):
            assert numerical_rank(x) <= 2
            assert record.residual == pytest.approx(np.linalg.norm(star16.b - star16.op.matvec(x)))

    def test_arguments(self, star16, rng):
        with pytest.raises(FactorizationError):
            rs_lr_gmres(star16.op, star16.b, 10, 0, 2)
        with pytest.raises(FactorizationError):
            rs_lr_gmres(dense_operator(rng.standard_normal((20, 16))), rng.standard_normal(20), 5, 2, 1)

    def test_gram_solve_singular(self):
        G = np.array([[1.0, 1.0], [1.0, 1.0]])
        result = gram_solve(G, np.array([1.0, 1.0]))
        assert np.all(np.isfinite(result))
        assert np.allclose(G @ result, [1.0, 1.0], atol=1e-6)
