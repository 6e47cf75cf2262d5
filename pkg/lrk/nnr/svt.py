# lrk/nnr/svt.py

import logging
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from lrk.krylov.solvers import new_report
from lrk.linops.vectorize import unvec, vec
from lrk.lowrank.svd_tools import shrink
from lrk.models import SolveReport, StoppingRule, StopReason
from lrk.nnr.irn import image_side
from lrk.nnr.parameters import SolverError, discrepancy_stop

logger = logging.getLogger(__name__)

StepSizes = Union[float, Sequence[float], Callable[[int], float]]


def _step_size(step_sizes: StepSizes, k: int) -> float:
    if callable(step_sizes):
        delta = float(step_sizes(k))
    elif np.isscalar(step_sizes):
        delta = float(step_sizes)
    else:
        # последний шаг повторяется, если последовательность короче max_iter
        delta = float(step_sizes[min(k, len(step_sizes)) - 1])
    if delta <= 0:
        logger.error(f"SVT: шаг δ_{k}={delta} <= 0")
        raise SolverError(f"Шаг SVT должен быть > 0, получено δ_{k}={delta}")
    return delta


def svt(
    op: LinearOperator,
    b: np.ndarray,
    tau: float,
    step_sizes: StepSizes,
    stop: Optional[StoppingRule] = None,
    x_exact: Optional[np.ndarray] = None,
    track_true_residual: bool = False,
    keep_iterates: bool = False,
    name: str = 'svt',
) -> SolveReport:
    """
    Пороговая обработка сингулярных чисел (SVT).

    X_k = D_τ(unvec(Aᵀ y_{k−1})), y_k = y_{k−1} + δ_k (b − A x_k), y₀ = 0.
    Записываемая невязка истинная ‖b − A x_k‖₂.

    Args:
        op (LinearOperator): Оператор A.
        b (np.ndarray): Правая часть.
        tau (float): Порог τ > 0.
        step_sizes (float | Sequence[float] | Callable[[int], float]): Шаги δ_k > 0.
        stop (Optional[StoppingRule]): Лимит итераций и принцип невязки.

    Returns:
        SolveReport: История итераций; metadata['dual_norm'] = ‖y‖₂ в конце.

    Raises:
        SolverError: τ <= 0 или δ_k <= 0.
    """
    if tau <= 0:
        logger.error(f"SVT: tau={tau} <= 0")
        raise SolverError(f"tau должно быть > 0, получено {tau}")
    A = aslinearoperator(op)
    n = image_side(op)
    stop = stop or StoppingRule()
    b = np.asarray(b, dtype=float).reshape(-1)
    report = new_report(name, keep_iterates, projected_identity=False)
    y = np.zeros(A.shape[0])
    x = np.zeros(A.shape[1])

    logger.info(f"{name}: старт, τ={tau}, max_iter={stop.max_iter}")
    for k in range(1, stop.max_iter + 1):
        delta = _step_size(step_sizes, k)
        x = vec(shrink(unvec(A.rmatvec(y), n), tau))
        r = b - A.matvec(x)
        residual = float(np.linalg.norm(r))
        report.record(x, 1, residual, 0.0, x_exact, residual if track_true_residual else None)
        if stop.use_discrepancy and discrepancy_stop(residual, stop.epsilon, stop.theta):
            report.stop_reason = StopReason.DISCREPANCY
            break
        y = y + delta * r
    report.metadata['dual_norm'] = float(np.linalg.norm(y))
    report.close_cycle(x)
    logger.info(
        f"{name}: завершено за {len(report.iterations)} итераций ({report.stop_reason.value}), "
        f"лучшая ошибка {report.min_rel_error}"
    )
    return report
