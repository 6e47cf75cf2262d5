# lrk/nnr/flexible.py

import logging
from enum import Enum
from typing import Optional, Union

import numpy as np
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from lrk.krylov.factorizations import arnoldi_step, gkb_step, start_arnoldi, start_gkb
from lrk.krylov.solvers import new_report, residual_norm
from lrk.linops.vectorize import unvec
from lrk.lowrank.reweight import (
    PowerMode, Reweighter, build_reweighter, build_reweighter_from_basis, preconditioner_action,
)
from lrk.models import LambdaKind, NnrConfig, SolveReport, StopReason
from lrk.nnr.irn import image_side, require_square
from lrk.nnr.parameters import ProjectedRegularizer, SolverError

logger = logging.getLogger(__name__)


class FlexibleProcess(str, Enum):
    FGK = 'fgk'
    FARNOLDI = 'farnoldi'


class FlexibleVariant(str, Enum):
    """Откуда берётся SVD для переобуславливателя шага i."""
    ITERATE = 'iterate'   # X_{i−1} = unvec(x_{i−1})
    BASIS = 'basis-v'     # unvec(v_i)
    NONE = 'none'         # без переобуславливания


def flexible_nnrp(
    op: LinearOperator,
    b: np.ndarray,
    config: NnrConfig,
    inner: Union[FlexibleProcess, str] = FlexibleProcess.FGK,
    variant: Union[FlexibleVariant, str] = FlexibleVariant.ITERATE,
    x_exact: Optional[np.ndarray] = None,
    track_true_residual: bool = False,
    keep_iterates: bool = False,
    name: Optional[str] = None,
) -> SolveReport:
    """
    FLSQR-NNRp (fgk) и FGMRES-NNRp (farnoldi) с одним циклом итераций.

    На шаге i столбец z_i = Sᵀ W^{−2} S v_i (fgk) или Sᵀ W^{−1} S v_i (farnoldi),
    где (W, S) построены по текущему приближению или по самому v_i. γ уменьшается
    после каждой итерации. Проекционная задача решается с λ̂ по правилу из config.

    Args:
        op (LinearOperator): Оператор A (квадратный для farnoldi).
        b (np.ndarray): Правая часть.
        config (NnrConfig): Настройки; используются max_iter, p, γ, λ̂ и принцип невязки.
        inner (FlexibleProcess): fgk или farnoldi.
        variant (FlexibleVariant): iterate, basis-v или none.
        x_exact (Optional[np.ndarray]): Точное решение.
        track_true_residual (bool): Считать ли истинную невязку.
        keep_iterates (bool): Сохранять ли все приближения.
        name (Optional[str]): Имя решателя в отчёте.

    Returns:
        SolveReport: История итераций.

    Raises:
        SolverError: farnoldi с неквадратным оператором или правило optimal
            (базис Z гибкого метода не ортонормирован).
    """
    A = aslinearoperator(op)
    inner = FlexibleProcess(inner)
    variant = FlexibleVariant(variant)
    if inner is FlexibleProcess.FARNOLDI:
        require_square(A, 'fgmres-nnrp')
    if config.lambda_rule.kind is LambdaKind.OPTIMAL:
        logger.error("Правило optimal для гибкого метода")
        raise SolverError("Правило optimal неприменимо к гибким методам")
    n = image_side(op)
    b = np.asarray(b, dtype=float).reshape(-1)
    mode = PowerMode.GKB if inner is FlexibleProcess.FGK else PowerMode.ARNOLDI
    if name is None:
        name = 'flsqr-nnrp' if inner is FlexibleProcess.FGK else 'fgmres-nnrp'
        if variant is FlexibleVariant.BASIS:
            name += '-v'

    regularizer = ProjectedRegularizer(config.lambda_rule, config.epsilon, config.theta)
    report = new_report(name, keep_iterates, projected_identity=True)
    if inner is FlexibleProcess.FGK:
        state = start_gkb(A, b, capacity=config.max_iter)
        step, projected = gkb_step, (lambda s: s.M)
    else:
        state = start_arnoldi(b, capacity=config.max_iter)
        step, projected = arnoldi_step, (lambda s: s.H)

    gamma = config.gamma_schedule.gamma0
    rw = Reweighter.identity(n, config.p, gamma, mode)
    x = np.zeros(A.shape[1])
    logger.info(f"{name}: старт, p={config.p}, max_iter={config.max_iter}, вариант {variant.value}")
    for _ in range(config.max_iter):
        if state.breakdown:
            report.stop_reason = StopReason.BREAKDOWN
            break
        if variant is FlexibleVariant.BASIS:
            rw = build_reweighter_from_basis(state.V.column(state.k), config.p, gamma, mode)
        precondition = None
        if variant is not FlexibleVariant.NONE:
            precondition = (lambda v, rw=rw: preconditioner_action(rw, v))
        step(state, A, precondition)

        y, residual, lam = regularizer.solve(projected(state), state.beta)
        x = state.solution_basis @ y
        report.record(
            x, 1, residual, lam, x_exact,
            residual_norm(A, b, x) if track_true_residual else None,
        )
        logger.debug(f"{name}: итерация {state.k}, невязка {residual:.6e}, γ={gamma:.1e}")
        if config.use_discrepancy and regularizer.reached(residual):
            report.stop_reason = StopReason.DISCREPANCY
            break
        if state.breakdown:
            report.stop_reason = StopReason.BREAKDOWN
            break
        gamma = config.gamma_schedule.next(gamma)
        if variant is FlexibleVariant.ITERATE:
            rw = build_reweighter(unvec(x, n), config.p, gamma, mode)
    report.close_cycle(x)
    logger.info(
        f"{name}: завершено за {len(report.iterations)} итераций ({report.stop_reason.value}), "
        f"лучшая ошибка {report.min_rel_error}"
    )
    return report
