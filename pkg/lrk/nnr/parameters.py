# lrk/nnr/parameters.py

import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from lrk.krylov.projected import projected_tikhonov
from lrk.lowrank.reweight import Direction, Reweighter, apply_transform
from lrk.models import LambdaKind, LambdaRule, SolveReport

logger = logging.getLogger(__name__)

LAMBDA_MAX = 1e8
SECANT_BOOTSTRAP = 1e-4
ORACLE_GRID = np.logspace(-16, 2, 73)


class SolverError(Exception):
    """Исключение, возникающее при неверных аргументах решателей или сбоях расчёта."""
    pass


def discrepancy_stop(projected_residual: float, epsilon: Optional[float], theta: float) -> bool:
    """Принцип невязки: True, если невязка <= θ·ε."""
    if epsilon is None:
        return False
    return projected_residual <= theta * epsilon


def secant_lambda_update(
    history: Sequence[Tuple[float, float]],
    epsilon: float,
    theta: float,
    h_norm: float = 1.0,
    lambda_max: float = LAMBDA_MAX,
) -> float:
    """
    Секущее обновление λ̂ для корня d(λ̂) = ‖β e₁ − H y(λ̂)‖₂ − θε.

    Невязка внутри [ε, θε] принимается как есть. Пока λ̂ = 0, регуляризация
    включается (λ̂ = 1e-4·‖H‖²) только если невязка ниже ε; иначе λ̂ остаётся 0.
    Условие следует из монотонного роста d(λ̂): при d(0) > 0 увеличение λ̂ лишь
    удаляет невязку от полосы.

    Args:
        history (Sequence[Tuple[float, float]]): Пары (λ̂_j, невязка_j), минимум одна.
        epsilon (float): Оценка нормы шума.
        theta (float): Коэффициент запаса.
        h_norm (float): ‖H‖ текущей проекционной задачи.
        lambda_max (float): Верхняя граница λ̂.

    Returns:
        float: λ̂_{j+1} в [0, lambda_max].

    Raises:
        SolverError: Пустая история.
    """
    if not history:
        raise SolverError("secant_lambda_update: история пуста")
    lam_j, res_j = history[-1]
    if epsilon <= res_j <= theta * epsilon:
        return lam_j
    d_j = res_j - theta * epsilon
    if lam_j == 0:
        if res_j < epsilon:
            return float(min(SECANT_BOOTSTRAP * h_norm ** 2, lambda_max))
        return 0.0
    if len(history) < 2:
        return lam_j
    lam_p, res_p = history[-2]
    d_p = res_p - theta * epsilon
    if d_j == d_p:
        return lam_j
    step = lam_j - d_j * (lam_j - lam_p) / (d_j - d_p)
    clamped = float(np.clip(step, 0.0, lambda_max))
    if clamped != step:
        logger.warning(f"Секущая дала λ̂={step:.3e}, ограничено до {clamped:.3e}")
    return clamped


def outer_stop_singular_values(sigma_prev: np.ndarray, sigma_curr: np.ndarray, tau_sigma: float) -> bool:
    """Остановка внешнего цикла: ‖σ_curr − σ_prev‖₂ < τ_σ (спектры дополняются нулями)."""
    size = max(len(sigma_prev), len(sigma_curr))
    prev = np.zeros(size)
    curr = np.zeros(size)
    prev[:len(sigma_prev)] = sigma_prev
    curr[:len(sigma_curr)] = sigma_curr
    return bool(np.linalg.norm(curr - prev) < tau_sigma)


def optimal_lambda_oracle(
    H: np.ndarray,
    beta: float,
    basis: np.ndarray,
    x_exact: np.ndarray,
    reweighter: Optional[Reweighter] = None,
    grid: np.ndarray = ORACLE_GRID,
) -> float:
    """
    Оптимальное λ̂ для проекционной задачи при известном точном решении.

    Минимизирует ‖Vᵀ x̂ − y(λ̂)‖₂ по логарифмической сетке с уточнением золотым
    сечением; для IRN x̂ = W S x (иначе x̂ = x).

    Returns:
        float: λ̂* (0, если минимум на нижней границе сетки).
    """
    target = x_exact if reweighter is None else apply_transform(reweighter, x_exact, Direction.S, 1)
    coords = basis.T @ target

    def objective(log_lambda: float) -> float:
        y, _ = projected_tikhonov(H, beta, 10.0 ** log_lambda)
        return float(np.sum((coords - y) ** 2))

    logs = np.log10(grid)
    values = np.array([objective(g) for g in logs])
    i = int(np.argmin(values))
    y_zero, _ = projected_tikhonov(H, beta, 0.0)
    if i == 0 or np.sum((coords - y_zero) ** 2) <= values[i]:
        return 0.0
    if i == len(logs) - 1:
        return float(grid[-1])
    best_log = logs[i]
    if values[i] < values[i - 1] and values[i] < values[i + 1]:
        result = minimize_scalar(objective, bracket=(logs[i - 1], logs[i], logs[i + 1]), method='golden')
        if result.fun <= values[i]:
            best_log = float(result.x)
    return float(10.0 ** best_log)


class ProjectedRegularizer:
    """Решение проекционных задач с λ̂, выбранным по заданному правилу."""

    def __init__(
        self,
        rule: Optional[LambdaRule] = None,
        epsilon: Optional[float] = None,
        theta: float = 1.01,
        lambda_max: float = LAMBDA_MAX,
    ) -> None:
        """
        Args:
            rule (Optional[LambdaRule]): Правило выбора λ̂ (по умолчанию 0).
            epsilon (Optional[float]): Оценка нормы шума (нужна для secant).
            theta (float): Коэффициент запаса.
            lambda_max (float): Верхняя граница λ̂.

        Raises:
            SolverError: secant без epsilon или правило search.
        """
        self.rule = rule or LambdaRule.zero()
        if self.rule.kind is LambdaKind.SECANT and epsilon is None:
            logger.error("Правило secant без оценки шума")
            raise SolverError("Правило secant требует epsilon")
        if self.rule.kind is LambdaKind.SEARCH:
            raise SolverError("Правило search выполняется перебором запусков, а не внутри решателя")
        self.epsilon = epsilon
        self.theta = theta
        self.lambda_max = lambda_max
        self.reweighter: Optional[Reweighter] = None
        self.reset()

    def reset(self) -> None:
        """Сбрасывает историю секущей (новый внешний цикл)."""
        self.lambda_hat = 0.0
        self.history: List[Tuple[float, float]] = []

    def reached(self, projected_residual: float) -> bool:
        """
        Достигнут ли принцип невязки. При правиле secant невязка должна попасть
        в полосу [ε, θε]: ниже ε секущая ещё увеличивает λ̂.
        """
        if self.rule.kind is LambdaKind.SECANT:
            return self.epsilon <= projected_residual <= self.theta * self.epsilon
        return discrepancy_stop(projected_residual, self.epsilon, self.theta)

    def solve(
        self,
        H: np.ndarray,
        beta: float,
        basis: Optional[np.ndarray] = None,
        x_exact: Optional[np.ndarray] = None,
    ) -> Tuple[np.ndarray, float, float]:
        """
        Returns:
            Tuple[np.ndarray, float, float]: y, проекционная невязка, использованное λ̂.
        """
        kind = self.rule.kind
        if kind is LambdaKind.FIXED:
            lam = self.rule.value
        elif kind is LambdaKind.SECANT:
            lam = self.lambda_hat
        elif kind is LambdaKind.OPTIMAL:
            if basis is None or x_exact is None:
                raise SolverError("Правило optimal требует ортонормированный базис и точное решение")
            lam = optimal_lambda_oracle(H, beta, basis, x_exact, self.reweighter)
        else:
            lam = 0.0
        y, residual = projected_tikhonov(H, beta, lam)
        if kind is LambdaKind.SECANT:
            self.history.append((lam, residual))
            self.lambda_hat = secant_lambda_update(
                self.history, self.epsilon, self.theta, float(np.linalg.norm(H, 2)), self.lambda_max,
            )
        return y, residual, lam


def exhaustive_lambda_search(run: Callable[[float], SolveReport], grid: Sequence[float]) -> SolveReport:
    """
    Перебор фиксированных λ̂: возвращает запуск с наименьшей минимальной ошибкой.

    Args:
        run (Callable[[float], SolveReport]): Запуск решателя с фиксированным λ̂.
        grid (Sequence[float]): Значения λ̂.

    Returns:
        SolveReport: Лучший запуск, metadata['lambda_hat_search'] = выбранное λ̂.
    """
    best: Optional[SolveReport] = None
    best_lambda = None
    for lam in grid:
        report = run(float(lam))
        error = report.min_rel_error
        logger.info(f"Перебор λ̂={lam:.3e}: минимальная ошибка {error}")
        if best is None or (error is not None and (best.min_rel_error is None or error < best.min_rel_error)):
            best, best_lambda = report, float(lam)
    if best is None:
        raise SolverError("Пустая сетка перебора λ̂")
    best.metadata['lambda_hat_search'] = best_lambda
    return best
