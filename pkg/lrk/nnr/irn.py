# lrk/nnr/irn.py

import logging
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from lrk.krylov.factorizations import arnoldi_step, gkb_step, start_arnoldi, start_gkb
from lrk.krylov.solvers import new_report, residual_norm
from lrk.linops.vectorize import side_of, unvec
from lrk.lowrank.reweight import Direction, PowerMode, Reweighter, apply_transform, build_reweighter
from lrk.models import LambdaRule, NnrConfig, SolveReport, StopReason
from lrk.nnr.parameters import ProjectedRegularizer, SolverError, outer_stop_singular_values

logger = logging.getLogger(__name__)


class InnerSolver(str, Enum):
    GKB = 'gkb'
    ARNOLDI = 'arnoldi'

    @property
    def power_mode(self) -> PowerMode:
        return PowerMode.GKB if self is InnerSolver.GKB else PowerMode.ARNOLDI


def image_side(op: LinearOperator) -> int:
    n = getattr(op, 'image_side', None) or side_of(op.shape[1])
    if n is None:
        logger.error(f"Число неизвестных {op.shape[1]} не является квадратом")
        raise SolverError(f"Требуется квадратное изображение, N={op.shape[1]}")
    return n


def require_square(op: LinearOperator, name: str) -> None:
    if op.shape[0] != op.shape[1]:
        logger.error(f"{name}: оператор {op.shape} не квадратный")
        raise SolverError(f"{name}: требуется квадратный оператор, получено {op.shape}")


def preconditioned_operator(op: LinearOperator, rw: Reweighter, inner: InnerSolver) -> LinearOperator:
    """
    Переобусловленный оператор внутренней задачи.

    gkb: A·Sᵀ·W⁻¹ (правое переобуславливание);
    arnoldi: S·A·Sᵀ·W⁻¹ (S ещё и левый ортогональный переобуславливатель).
    """
    A = aslinearoperator(op)
    M, N = A.shape

    def back(x_hat: np.ndarray) -> np.ndarray:
        return apply_transform(rw, x_hat, Direction.S_TRANSPOSE, -1)

    if inner is InnerSolver.GKB:
        return LinearOperator(
            (M, N), dtype=float,
            matvec=lambda x_hat: A.matvec(back(x_hat)),
            rmatvec=lambda u: apply_transform(rw, A.rmatvec(u), Direction.S, -1),
        )
    return LinearOperator(
        (N, N), dtype=float,
        matvec=lambda x_hat: apply_transform(rw, A.matvec(back(x_hat)), Direction.S, 0),
        rmatvec=lambda u: apply_transform(
            rw, A.rmatvec(apply_transform(rw, u, Direction.S_TRANSPOSE, 0)), Direction.S, -1,
        ),
    )


def solve_reweighted(
    op: LinearOperator,
    b: np.ndarray,
    rw: Reweighter,
    inner: Union[InnerSolver, str],
    lambda_rule: Optional[LambdaRule] = None,
    max_inner: int = 50,
    epsilon: Optional[float] = None,
    theta: float = 1.01,
    use_discrepancy: bool = False,
    x_exact: Optional[np.ndarray] = None,
    report: Optional[SolveReport] = None,
    outer: int = 1,
    track_true_residual: bool = False,
) -> Tuple[np.ndarray, StopReason]:
    """
    Один внешний цикл IRN: переобусловленный крыловский метод от x = 0 для
    min ‖A x − b‖² + λ̂‖W S x‖² при фиксированной паре (W, S).

    Args:
        op (LinearOperator): Оператор A.
        b (np.ndarray): Правая часть.
        rw (Reweighter): Фиксированная пара (W, S).
        inner (InnerSolver): gkb или arnoldi.
        lambda_rule (Optional[LambdaRule]): Правило λ̂.
        max_inner (int): Максимум итераций.
        epsilon (Optional[float]): Оценка нормы шума.
        theta (float): Коэффициент запаса.
        use_discrepancy (bool): Завершать ли цикл по принципу невязки.
        x_exact (Optional[np.ndarray]): Точное решение.
        report (Optional[SolveReport]): Куда записывать итерации.
        outer (int): Номер внешнего цикла для записей.
        track_true_residual (bool): Считать ли истинную невязку.

    Returns:
        Tuple[np.ndarray, StopReason]: Приближение x = Sᵀ W⁻¹ x̂ и причина завершения цикла.
    """
    A = aslinearoperator(op)
    inner = InnerSolver(inner)
    b = np.asarray(b, dtype=float).reshape(-1)
    K = preconditioned_operator(A, rw, inner)
    if inner is InnerSolver.GKB:
        state = start_gkb(K, b, capacity=max_inner)
        step, projected = gkb_step, (lambda s: s.M)
    else:
        require_square(A, 'irn-gmres')
        # правая часть S b пересчитывается для каждой новой пары (W, S)
        state = start_arnoldi(apply_transform(rw, b, Direction.S, 0), capacity=max_inner)
        step, projected = arnoldi_step, (lambda s: s.H)

    regularizer = ProjectedRegularizer(lambda_rule, epsilon, theta)
    regularizer.reweighter = rw
    x = np.zeros(A.shape[1])
    reason = StopReason.MAX_ITER
    for _ in range(max_inner):
        if state.breakdown:
            reason = StopReason.BREAKDOWN
            break
        step(state, K)
        basis = state.solution_basis
        y, residual, lam = regularizer.solve(projected(state), state.beta, basis, x_exact)
        x = apply_transform(rw, basis @ y, Direction.S_TRANSPOSE, -1)
        if report is not None:
            report.record(
                x, outer, residual, lam, x_exact,
                residual_norm(A, b, x) if track_true_residual else None,
            )
        if use_discrepancy and regularizer.reached(residual):
            reason = StopReason.DISCREPANCY
            break
        if state.breakdown:
            reason = StopReason.BREAKDOWN
            break
    return x, reason


def irn_nnrp(
    op: LinearOperator,
    b: np.ndarray,
    config: NnrConfig,
    inner: Union[InnerSolver, str] = InnerSolver.GKB,
    x_exact: Optional[np.ndarray] = None,
    track_true_residual: bool = False,
    keep_iterates: bool = False,
    name: Optional[str] = None,
) -> SolveReport:
    """
    IRN-LSQR-NNRp (inner=gkb) и IRN-GMRES-NNRp (inner=arnoldi).

    Внешний цикл: (W, S) по текущему X_k (единичные на первом цикле), внутренний
    переобусловленный метод от нуля до принципа невязки или max_inner, затем
    уменьшение γ. Остановка по сближению нормированных спектров или max_outer.

    Raises:
        SolverError: arnoldi с неквадратным оператором.
    """
    A = aslinearoperator(op)
    inner = InnerSolver(inner)
    if inner is InnerSolver.ARNOLDI:
        require_square(A, 'irn-gmres-nnrp')
    n = image_side(op)
    name = name or ('irn-lsqr-nnrp' if inner is InnerSolver.GKB else 'irn-gmres-nnrp')
    schedule = config.gamma_schedule
    mode = inner.power_mode
    report = new_report(name, keep_iterates, projected_identity=True)
    report.stop_reason = StopReason.MAX_OUTER

    gamma = schedule.gamma0
    rw = Reweighter.identity(n, config.p, gamma, mode)
    previous: Optional[np.ndarray] = None
    logger.info(
        f"{name}: старт, p={config.p}, циклов {config.max_outer} x {config.max_inner}, "
        f"λ̂: {config.lambda_rule.kind.value}"
    )
    for outer in range(1, config.max_outer + 1):
        budget = min(config.max_inner, config.max_iter - len(report.iterations))
        x, reason = solve_reweighted(
            A, b, rw, inner, config.lambda_rule, budget, config.epsilon, config.theta,
            config.use_discrepancy, x_exact, report, outer, track_true_residual,
        )
        spectrum = report.close_cycle(x)
        logger.info(f"{name}: цикл {outer} завершён ({reason.value}), итераций всего {len(report.iterations)}")
        if len(report.iterations) >= config.max_iter:
            report.stop_reason = StopReason.MAX_ITER
            break
        if previous is not None and outer_stop_singular_values(previous, spectrum, config.tau_sigma):
            report.stop_reason = StopReason.SINGULAR_VALUES
            break
        previous = spectrum
        gamma = schedule.next(gamma)
        rw = build_reweighter(unvec(x, n), config.p, gamma, mode)
    logger.info(
        f"{name}: завершено ({report.stop_reason.value}), лучшая ошибка {report.min_rel_error}"
    )
    return report
