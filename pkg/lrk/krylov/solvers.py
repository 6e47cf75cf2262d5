# lrk/krylov/solvers.py

import logging
from typing import Callable, Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from lrk.krylov.factorizations import (
    FactorizationError, Preconditioner, arnoldi_step, gkb_step, start_arnoldi, start_gkb,
)
from lrk.linops.vectorize import side_of
from lrk.lowrank.svd_tools import truncate
from lrk.models import LambdaKind, LambdaRule, SolveReport, StoppingRule, StopReason

logger = logging.getLogger(__name__)

GRAM_RIDGE = 1e-12
# относительно ‖b‖
ZERO_RESIDUAL_TOL = 1e-14


def residual_norm(op: LinearOperator, b: np.ndarray, x: np.ndarray) -> float:
    """Истинная невязка ‖b − A x‖₂."""
    return float(np.linalg.norm(b - op.matvec(x)))


def new_report(name: str, keep_iterates: bool = False, projected_identity: bool = True) -> SolveReport:
    return SolveReport(
        solver=name,
        iterates=[] if keep_iterates else None,
        projected_identity=projected_identity,
    )


def _image_side(op: LinearOperator) -> int:
    n = getattr(op, 'image_side', None) or side_of(op.shape[1])
    if n is None:
        logger.error(f"Число неизвестных {op.shape[1]} не является квадратом")
        raise FactorizationError(f"Низкоранговым методам нужен квадратный размер изображения, N={op.shape[1]}")
    return n


def _check_rank(name: str, value: int, n: int) -> None:
    if not 1 <= value <= n:
        logger.error(f"{name}={value} вне [1, {n}]")
        raise FactorizationError(f"{name} должно лежать в [1, {n}], получено {value}")


def _projected_loop(
    name: str,
    op: LinearOperator,
    b: np.ndarray,
    process: str,
    stop: Optional[StoppingRule],
    lambda_rule: Optional[LambdaRule],
    precondition: Optional[Preconditioner] = None,
    finalize: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    x_exact: Optional[np.ndarray] = None,
    track_true_residual: bool = False,
    keep_iterates: bool = False,
) -> SolveReport:
    """
    Общий цикл гибридных проекционных методов (Арнольди или GKB).

    На итерации k: шаг факторизации, проекционная задача с λ̂ по правилу,
    x_k = finalize(Z_k y_k), запись метрик и проверка принципа невязки.
    """
    # отложенный импорт: nnr.parameters сам зависит от пакета krylov
    from lrk.nnr.parameters import ProjectedRegularizer, SolverError

    op = aslinearoperator(op)
    b = np.asarray(b, dtype=float).reshape(-1)
    stop = stop or StoppingRule()
    rule = lambda_rule or LambdaRule.zero()
    if rule.kind is LambdaKind.OPTIMAL and (precondition is not None or finalize is not None):
        raise SolverError(f"{name}: правило optimal требует ортонормированный базис решения")
    regularizer = ProjectedRegularizer(rule, stop.epsilon, stop.theta)
    report = new_report(name, keep_iterates, projected_identity=finalize is None)

    if process == 'arnoldi':
        if op.shape[0] != op.shape[1]:
            logger.error(f"{name}: оператор {op.shape} не квадратный")
            raise FactorizationError(f"{name}: требуется квадратный оператор, получено {op.shape}")
        state = start_arnoldi(b, capacity=stop.max_iter)
        step, projected = arnoldi_step, (lambda s: s.H)
    else:
        state = start_gkb(op, b, capacity=stop.max_iter)
        step, projected = gkb_step, (lambda s: s.M)

    logger.info(f"{name}: старт, размер {op.shape}, max_iter={stop.max_iter}, λ̂: {rule.kind.value}")
    x = np.zeros(op.shape[1])
    for _ in range(stop.max_iter):
        if state.breakdown:
            report.stop_reason = StopReason.BREAKDOWN
            break
        step(state, op, precondition)
        basis = state.solution_basis
        y, residual, lam = regularizer.solve(projected(state), state.beta, basis, x_exact)
        x = basis @ y
        if finalize is not None:
            x = finalize(x)
        report.record(
            x, 1, residual, lam, x_exact,
            residual_norm(op, b, x) if track_true_residual else None,
        )
        logger.debug(f"{name}: итерация {state.k}, невязка {residual:.6e}, λ̂={lam:.3e}")
        if stop.use_discrepancy and regularizer.reached(residual):
            report.stop_reason = StopReason.DISCREPANCY
            break
        if state.breakdown:
            report.stop_reason = StopReason.BREAKDOWN
            break
    report.close_cycle(x)
    logger.info(
        f"{name}: завершено за {len(report.iterations)} итераций ({report.stop_reason.value}), "
        f"лучшая ошибка {report.min_rel_error}"
    )
    return report


def gmres(
    op: LinearOperator,
    b: np.ndarray,
    stop: Optional[StoppingRule] = None,
    lambda_rule: Optional[LambdaRule] = None,
    x_exact: Optional[np.ndarray] = None,
    track_true_residual: bool = False,
    keep_iterates: bool = False,
    name: str = 'gmres',
) -> SolveReport:
    """
    GMRES (гибридный при λ̂ > 0): x_k = V_k y_k, y_k из проекционной задачи Тихонова.

    Args:
        op (LinearOperator): Квадратный оператор.
        b (np.ndarray): Правая часть.
        stop (Optional[StoppingRule]): Лимит итераций и принцип невязки.
        lambda_rule (Optional[LambdaRule]): Правило λ̂ (по умолчанию 0).
        x_exact (Optional[np.ndarray]): Точное решение для относительных ошибок.
        track_true_residual (bool): Считать ли истинную невязку на каждой итерации.
        keep_iterates (bool): Сохранять ли все приближения.

    Returns:
        SolveReport: История итераций.
    """
    return _projected_loop(
        name, op, b, 'arnoldi', stop, lambda_rule,
        x_exact=x_exact, track_true_residual=track_true_residual, keep_iterates=keep_iterates,
    )


def lsqr(
    op: LinearOperator,
    b: np.ndarray,
    stop: Optional[StoppingRule] = None,
    lambda_rule: Optional[LambdaRule] = None,
    x_exact: Optional[np.ndarray] = None,
    track_true_residual: bool = False,
    keep_iterates: bool = False,
    name: str = 'lsqr',
) -> SolveReport:
    """LSQR через бидиагонализацию Голуба–Кахана; оператор может быть прямоугольным."""
    return _projected_loop(
        name, op, b, 'gkb', stop, lambda_rule,
        x_exact=x_exact, track_true_residual=track_true_residual, keep_iterates=keep_iterates,
    )


def lr_fgmres(
    op: LinearOperator,
    b: np.ndarray,
    kappa_b: int,
    kappa: int,
    stop: Optional[StoppingRule] = None,
    lambda_rule: Optional[LambdaRule] = None,
    x_exact: Optional[np.ndarray] = None,
    track_true_residual: bool = False,
    keep_iterates: bool = False,
    name: str = 'lr-fgmres',
) -> SolveReport:
    """
    LR-FGMRES: гибкий Арнольди с z_i = τ_{κ_B}(v_i), решение x_k = τ_κ(Z_k y_k).
    """
    n = _image_side(aslinearoperator(op))
    _check_rank('kappa_b', kappa_b, n)
    _check_rank('kappa', kappa, n)
    return _projected_loop(
        name, op, b, 'arnoldi', stop, lambda_rule,
        precondition=lambda v: truncate(v, kappa_b),
        finalize=lambda x: truncate(x, kappa),
        x_exact=x_exact, track_true_residual=track_true_residual, keep_iterates=keep_iterates,
    )


def lr_flsqr(
    op: LinearOperator,
    b: np.ndarray,
    kappa_b: int,
    kappa: int,
    stop: Optional[StoppingRule] = None,
    lambda_rule: Optional[LambdaRule] = None,
    x_exact: Optional[np.ndarray] = None,
    track_true_residual: bool = False,
    keep_iterates: bool = False,
    name: str = 'lr-flsqr',
) -> SolveReport:
    """LR-FLSQR: гибкий Голуб–Кахан с z_i = τ_{κ_B}(v_i), решение x_k = τ_κ(Z_k y_k)."""
    n = _image_side(aslinearoperator(op))
    _check_rank('kappa_b', kappa_b, n)
    _check_rank('kappa', kappa, n)
    return _projected_loop(
        name, op, b, 'gkb', stop, lambda_rule,
        precondition=lambda v: truncate(v, kappa_b),
        finalize=lambda x: truncate(x, kappa),
        x_exact=x_exact, track_true_residual=track_true_residual, keep_iterates=keep_iterates,
    )


def gram_solve(G: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """
    Решение с симметричной матрицей Грама; при вырожденности добавляется
    гребень 1e-12·‖G‖ с предупреждением.
    """
    try:
        return cho_solve(cho_factor(G), rhs)
    except LinAlgError:
        ridge = GRAM_RIDGE * max(float(np.linalg.norm(G)), 1.0)
        logger.warning(f"Вырожденная матрица Грама {G.shape}, добавлен гребень {ridge:.1e}")
        return np.linalg.solve(G + ridge * np.eye(G.shape[0]), rhs)


def rs_lr_gmres(
    op: LinearOperator,
    b: np.ndarray,
    restart_len: int,
    truncation_rank: int,
    max_outer: int,
    stop: Optional[StoppingRule] = None,
    x_exact: Optional[np.ndarray] = None,
    track_true_residual: bool = False,
    keep_iterates: bool = False,
    name: str = 'rs-lr-gmres',
) -> SolveReport:
    """
    Перезапускаемый GMRES с усечением ранга.

    Внутри цикла новый вектор u_k = A v_{k−1} ортогонализуется к неортонормированному
    базису через решение с матрицей Грама (VᵀV) и усекается τ_κ. Внешнее обновление:
    (U_mᵀ A V_m) y = U_mᵀ r, U_m = A V_m, x_ℓ = τ_κ(x_{ℓ−1} + V_m y).
    Каждое внутреннее приближение τ_κ(x_{ℓ−1} + V_k y_k) записывается как итерация;
    записанная невязка истинная.

    Args:
        op (LinearOperator): Квадратный оператор.
        b (np.ndarray): Правая часть.
        restart_len (int): Длина цикла m.
        truncation_rank (int): Ранг усечения κ.
        max_outer (int): Максимум перезапусков.
        stop (Optional[StoppingRule]): Общий лимит итераций и принцип невязки.

    Returns:
        SolveReport: История итераций.
    """
    from lrk.nnr.parameters import discrepancy_stop

    op = aslinearoperator(op)
    if op.shape[0] != op.shape[1]:
        logger.error(f"{name}: оператор {op.shape} не квадратный")
        raise FactorizationError(f"{name}: требуется квадратный оператор, получено {op.shape}")
    n = _image_side(op)
    _check_rank('truncation_rank', truncation_rank, n)
    if restart_len < 1 or max_outer < 1:
        raise FactorizationError("restart_len и max_outer должны быть >= 1")
    stop = stop or StoppingRule(max_iter=restart_len * max_outer)
    b = np.asarray(b, dtype=float).reshape(-1)
    report = new_report(name, keep_iterates, projected_identity=False)
    x = np.zeros(op.shape[1])
    report.stop_reason = StopReason.MAX_OUTER
    zero_tol = ZERO_RESIDUAL_TOL * float(np.linalg.norm(b))

    logger.info(f"{name}: старт, m={restart_len}, κ={truncation_rank}, циклов {max_outer}")
    finished = False
    for outer in range(1, max_outer + 1):
        r = b - op.matvec(x)
        r_norm = float(np.linalg.norm(r))
        if r_norm <= zero_tol:
            report.stop_reason = StopReason.ZERO_RESIDUAL
            break
        V = [r / r_norm]
        AV = [op.matvec(V[0])]
        x_trial = x
        for k in range(1, restart_len + 1):
            Vm = np.column_stack(V)
            Um = np.column_stack(AV)
            y = gram_solve(Um.T @ Um, Um.T @ r)
            x_trial = truncate(x + Vm @ y, truncation_rank)
            residual = residual_norm(op, b, x_trial)
            report.record(x_trial, outer, residual, 0.0, x_exact, residual if track_true_residual else None)
            if residual <= zero_tol:
                report.stop_reason = StopReason.ZERO_RESIDUAL
                finished = True
                break
            if stop.use_discrepancy and discrepancy_stop(residual, stop.epsilon, stop.theta):
                report.stop_reason = StopReason.DISCREPANCY
                finished = True
                break
            if len(report.iterations) >= stop.max_iter:
                report.stop_reason = StopReason.MAX_ITER
                finished = True
                break
            if k == restart_len:
                break
            u = AV[-1]
            w = u - Vm @ gram_solve(Vm.T @ Vm, Vm.T @ u)
            w = truncate(w, truncation_rank)
            w_norm = float(np.linalg.norm(w))
            if w_norm <= 1e-12 * float(np.linalg.norm(u)):
                logger.warning(f"{name}: обрыв базиса в цикле {outer} на шаге {k}")
                break
            V.append(w / w_norm)
            AV.append(op.matvec(V[-1]))
        x = x_trial
        report.close_cycle(x)
        if finished:
            break
    logger.info(
        f"{name}: завершено за {len(report.iterations)} итераций ({report.stop_reason.value}), "
        f"лучшая ошибка {report.min_rel_error}"
    )
    return report
