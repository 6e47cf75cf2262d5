"""
Воспроизведение трендов на задачах 64×64: регуляризация ядерной нормой даёт
меньшую ошибку, чем GMRES/LSQR без неё. Запуск: pytest -m slow.
"""
import pytest

from lrk.krylov import gmres, lr_fgmres, lr_flsqr, lsqr
from lrk.lowrank import numerical_rank
from lrk.models import LambdaRule, NnrConfig, StoppingRule, StopReason
from lrk.nnr import flexible_nnrp, irn_nnrp
from lrk.processing import ExperimentRunner, parse_experiment_config
from lrk.problems import inpainting_problem, phantom_problem, star_problem

pytestmark = pytest.mark.slow

MAX_ITER = 100


@pytest.fixture(scope='module')
def star64():
    return star_problem(n=64, noise_level=1e-3, sigma_blur=2.0, seed=0)


@pytest.fixture(scope='module')
def phantom64():
    return phantom_problem(n=64, noise_level=1e-2, angle_span_degrees=90.0, seed=0)


@pytest.fixture(scope='module')
def inpainting64():
    return inpainting_problem(image='peppers-like', n=64, rank_cap=20, missing_fraction=0.4,
                              noise_level=1e-2, seed=0)


def _baseline(solver, problem):
    return solver(problem.op, problem.b, StoppingRule(max_iter=MAX_ITER), x_exact=problem.x_exact)


def _flexible_v(problem):
    config = NnrConfig(max_iter=MAX_ITER, use_discrepancy=False)
    return flexible_nnrp(problem.op, problem.b, config, 'fgk', 'basis-v', x_exact=problem.x_exact)


def _irn(problem, inner):
    config = NnrConfig(epsilon=problem.epsilon, max_outer=4, max_inner=25, max_iter=MAX_ITER)
    return irn_nnrp(problem.op, problem.b, config, inner, x_exact=problem.x_exact)


def test_deblurring_irn_beats_gmres(star64):
    plain = _baseline(gmres, star64).min_rel_error
    regularized = _irn(star64, 'arnoldi').min_rel_error
    assert regularized <= 0.9 * plain


def test_tomography_flexible_beats_lsqr(phantom64):
    plain = _baseline(lsqr, phantom64).min_rel_error
    assert _flexible_v(phantom64).min_rel_error <= 0.9 * plain


def test_inpainting_nuclear_norm_beats_lsqr(inpainting64):
    plain = _baseline(lsqr, inpainting64).min_rel_error
    assert _flexible_v(inpainting64).min_rel_error < plain
    assert _irn(inpainting64, 'gkb').min_rel_error < plain


def test_low_rank_solutions(star64, phantom64):
    stop = StoppingRule(max_iter=MAX_ITER)
    for report in (lr_fgmres(star64.op, star64.b, 30, 30, stop),
                   lr_flsqr(phantom64.op, phantom64.b, 30, 30, stop)):
        assert numerical_rank(report.final_x) <= 30


def test_secant_and_discrepancy(star64):
    eps, theta = star64.epsilon, 1.01
    stop = StoppingRule(max_iter=MAX_ITER, epsilon=eps, theta=theta, use_discrepancy=True)
    plain = gmres(star64.op, star64.b, stop)
    assert plain.stop_reason is StopReason.DISCREPANCY

    secant = gmres(star64.op, star64.b, stop, LambdaRule('secant'))
    if secant.stop_reason is StopReason.DISCREPANCY:
        assert eps <= secant.final_residual <= theta * eps
    else:
        assert len(secant.iterations) == MAX_ITER


def test_rerun_is_bitwise_identical(tmp_path):
    data = {
        'problem': {'type': 'star', 'n': 64, 'noise_level': 1e-3, 'sigma_blur': 2.0, 'seed': 0},
        'solvers': [
            {'name': 'gmres', 'max_iter': MAX_ITER},
            {'name': 'irn-gmres-nnrp', 'max_iter': MAX_ITER, 'max_outer': 4, 'max_inner': 25},
        ],
    }
    for out in ('first', 'second'):
        result = ExperimentRunner(parse_experiment_config(data), tmp_path / out).run()
        assert result.ok
    for name in ('gmres_iterations.csv', 'irn-gmres-nnrp_iterations.csv', 'irn-gmres-nnrp_spectrum_outer1.csv'):
        assert (tmp_path / 'first' / name).read_bytes() == (tmp_path / 'second' / name).read_bytes()
