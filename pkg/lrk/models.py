# lrk/models.py

from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from attrs import define, field, frozen

from lrk.config import ConfigurationError
from lrk.lowrank.svd_tools import normalized_singular_values

__all__ = [
    'ConfigurationError', 'StopReason', 'LambdaKind', 'LambdaRule', 'StoppingRule',
    'GammaSchedule', 'NnrConfig', 'IterationRecord', 'SolveReport', 'CSV_COLUMNS',
]

CSV_COLUMNS: Tuple[str, ...] = ('iter', 'outer', 'rel_error', 'residual', 'lambda_hat')


class StopReason(str, Enum):
    """Причина остановки решателя."""
    DISCREPANCY = 'discrepancy'
    MAX_ITER = 'max_iter'
    BREAKDOWN = 'breakdown'
    SINGULAR_VALUES = 'singular_values'
    MAX_OUTER = 'max_outer'
    ZERO_RESIDUAL = 'zero_residual'


class LambdaKind(str, Enum):
    """Правило выбора параметра регуляризации проекционной задачи."""
    ZERO = 'zero'
    FIXED = 'fixed'
    SECANT = 'secant'
    OPTIMAL = 'optimal'
    SEARCH = 'search'


def _positive(instance, attribute, value) -> None:
    if value is not None and value <= 0:
        raise ConfigurationError(f"{attribute.name} должно быть > 0, получено {value}")


def _at_least_one(instance, attribute, value) -> None:
    if value < 1:
        raise ConfigurationError(f"{attribute.name} должно быть >= 1, получено {value}")


def _theta(instance, attribute, value) -> None:
    if value <= 1:
        raise ConfigurationError(f"theta должно быть > 1, получено {value}")


@frozen
class LambdaRule:
    """
    Правило для λ̂ на каждой итерации.

    Attributes:
        kind (LambdaKind): Вид правила.
        value (float): Значение для правила fixed.
        grid (Tuple[float, ...]): Сетка для перебора (search).
    """
    kind: LambdaKind = field(default=LambdaKind.ZERO, converter=LambdaKind)
    value: float = 0.0
    grid: Tuple[float, ...] = field(default=(), converter=tuple)

    def __attrs_post_init__(self) -> None:
        if self.value < 0:
            raise ConfigurationError(f"lambda_rule.value должно быть >= 0, получено {self.value}")
        if self.kind is LambdaKind.SEARCH and not self.grid:
            raise ConfigurationError("lambda_rule.grid не может быть пустым для правила search")

    @classmethod
    def zero(cls) -> 'LambdaRule':
        return cls(LambdaKind.ZERO)

    @classmethod
    def fixed(cls, value: float) -> 'LambdaRule':
        return cls(LambdaKind.FIXED, float(value))


@frozen
class StoppingRule:
    """
    Правило остановки одноуровневых решателей.

    Attributes:
        max_iter (int): Максимальное число итераций.
        epsilon (Optional[float]): Оценка нормы шума ‖η‖₂.
        theta (float): Коэффициент запаса принципа невязки (> 1).
        use_discrepancy (bool): Останавливаться ли по принципу невязки.
    """
    max_iter: int = field(default=100, validator=_at_least_one)
    epsilon: Optional[float] = field(default=None)
    theta: float = field(default=1.01, validator=_theta)
    use_discrepancy: bool = False

    def __attrs_post_init__(self) -> None:
        if self.epsilon is not None and self.epsilon < 0:
            raise ConfigurationError(f"epsilon должно быть >= 0, получено {self.epsilon}")
        if self.use_discrepancy and self.epsilon is None:
            raise ConfigurationError("epsilon обязателен при остановке по принципу невязки")


@frozen
class GammaSchedule:
    """Геометрическое уменьшение γ: γ_{k+1} = max(γ_k·decay, γ_min)."""
    gamma0: float = field(default=1.0, validator=_positive)
    decay: float = field(default=0.1, validator=_positive)
    gamma_min: float = field(default=1e-10, validator=_positive)

    def __attrs_post_init__(self) -> None:
        if self.decay > 1:
            raise ConfigurationError(f"gamma_decay должно быть <= 1, получено {self.decay}")

    def next(self, gamma: float) -> float:
        return max(gamma * self.decay, self.gamma_min)


@frozen
class NnrConfig:
    """
    Настройки решателей с ядерной нормой (IRN и гибкие варианты).

    Attributes:
        p (float): Показатель функции Шаттена, (0, 1].
        gamma_schedule (GammaSchedule): Расписание сглаживающего параметра.
        lambda_rule (LambdaRule): Выбор λ̂ проекционной задачи.
        theta (float): Коэффициент запаса принципа невязки.
        epsilon (Optional[float]): Оценка нормы шума.
        max_outer (int): Максимум внешних циклов IRN.
        max_inner (int): Максимум внутренних итераций за цикл.
        max_iter (int): Общий лимит итераций.
        tau_sigma (float): Порог остановки по сингулярным числам.
        use_discrepancy (bool): Завершать внутренний цикл по принципу невязки.
    """
    p: float = 1.0
    gamma_schedule: GammaSchedule = field(factory=GammaSchedule)
    lambda_rule: LambdaRule = field(factory=LambdaRule.zero)
    theta: float = field(default=1.01, validator=_theta)
    epsilon: Optional[float] = None
    max_outer: int = field(default=4, validator=_at_least_one)
    max_inner: int = field(default=25, validator=_at_least_one)
    max_iter: int = field(default=100, validator=_at_least_one)
    tau_sigma: float = field(default=0.1, validator=_positive)
    use_discrepancy: bool = True

    def __attrs_post_init__(self) -> None:
        if not 0 < self.p <= 1:
            raise ConfigurationError(f"p должно лежать в (0, 1], получено {self.p}")
        if self.use_discrepancy and self.epsilon is None:
            raise ConfigurationError("epsilon обязателен при остановке по принципу невязки")

    def stopping(self, max_iter: Optional[int] = None) -> StoppingRule:
        return StoppingRule(
            max_iter=max_iter or self.max_iter,
            epsilon=self.epsilon,
            theta=self.theta,
            use_discrepancy=self.use_discrepancy,
        )


@frozen
class IterationRecord:
    iteration: int
    outer: int
    residual: float
    lambda_hat: float
    rel_error: Optional[float] = None
    true_residual: Optional[float] = None


@define(eq=False)
class SolveReport:
    """
    Результат работы решателя: история итераций, лучшие и финальные решения, спектры.

    Attributes:
        solver (str): Имя решателя.
        iterations (List[IterationRecord]): История по итерациям.
        final_x (Optional[np.ndarray]): Последнее приближение.
        best_x (Optional[np.ndarray]): Приближение с наименьшей относительной ошибкой.
        spectra (List[np.ndarray]): Нормированные сингулярные числа в конце каждого цикла.
        stop_reason (StopReason): Причина остановки.
        projected_identity (bool): Совпадает ли отслеживаемая невязка с истинной.
        iterates (Optional[List[np.ndarray]]): Все приближения, если их попросили сохранить.
        metadata (Dict[str, object]): Доп. сведения (например, выбранное λ̂ при переборе).
    """
    solver: str
    iterations: List[IterationRecord] = field(factory=list)
    final_x: Optional[np.ndarray] = None
    best_x: Optional[np.ndarray] = None
    spectra: List[np.ndarray] = field(factory=list)
    stop_reason: StopReason = StopReason.MAX_ITER
    projected_identity: bool = True
    iterates: Optional[List[np.ndarray]] = None
    metadata: Dict[str, object] = field(factory=dict)
    _best: Optional[Tuple[int, float]] = field(default=None, init=False)

    def record(
        self,
        x: np.ndarray,
        outer: int,
        residual: float,
        lambda_hat: float = 0.0,
        x_exact: Optional[np.ndarray] = None,
        true_residual: Optional[float] = None,
    ) -> IterationRecord:
        """
        Добавляет запись об очередной итерации и обновляет лучшее приближение.

        Args:
            x (np.ndarray): Текущее приближение.
            outer (int): Номер внешнего цикла (1 для одноуровневых методов).
            residual (float): Отслеживаемая норма невязки.
            lambda_hat (float): Использованное λ̂.
            x_exact (Optional[np.ndarray]): Точное решение, если известно.
            true_residual (Optional[float]): Истинная невязка ‖b − A x‖₂.

        Returns:
            IterationRecord: Добавленная запись.
        """
        rel_error = None
        if x_exact is not None:
            rel_error = float(np.linalg.norm(x_exact - x) / np.linalg.norm(x_exact))
        entry = IterationRecord(
            iteration=len(self.iterations) + 1,
            outer=outer,
            residual=float(residual),
            lambda_hat=float(lambda_hat),
            rel_error=rel_error,
            true_residual=None if true_residual is None else float(true_residual),
        )
        self.iterations.append(entry)
        self.final_x = x
        if rel_error is not None and (self._best is None or rel_error < self._best[1]):
            self._best = (entry.iteration, rel_error)
            self.best_x = x
        if self.iterates is not None:
            self.iterates.append(x.copy())
        return entry

    def close_cycle(self, x: np.ndarray) -> np.ndarray:
        """Сохраняет нормированный спектр приближения в конце цикла."""
        spectrum = normalized_singular_values(x)
        self.spectra.append(spectrum)
        return spectrum

    @property
    def best(self) -> Optional[Tuple[int, float]]:
        """(номер итерации, относительная ошибка) лучшего приближения."""
        return self._best

    @property
    def min_rel_error(self) -> Optional[float]:
        return None if self._best is None else self._best[1]

    @property
    def final_residual(self) -> Optional[float]:
        return self.iterations[-1].residual if self.iterations else None

    def to_frame(self) -> pd.DataFrame:
        """История итераций в виде таблицы с колонками CSV-выгрузки."""
        rows = [
            {
                'iter': r.iteration,
                'outer': r.outer,
                'rel_error': np.nan if r.rel_error is None else r.rel_error,
                'residual': r.residual,
                'lambda_hat': r.lambda_hat,
            }
            for r in self.iterations
        ]
        return pd.DataFrame(rows, columns=list(CSV_COLUMNS))

    def summary(self) -> Dict[str, object]:
        best = self._best
        return {
            'min_rel_error': None if best is None else best[1],
            'best_iteration': None if best is None else best[0],
            'iterations': len(self.iterations),
            'outer_cycles': len(self.spectra),
            'stop_reason': self.stop_reason.value,
            'final_residual': self.final_residual,
            **self.metadata,
        }
