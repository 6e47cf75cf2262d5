# lrk/lowrank/reweight.py

import logging
from enum import Enum
from typing import Union

import numpy as np
from attrs import frozen

from lrk.linops.vectorize import side_of, unvec, vec
from lrk.lowrank.svd_tools import LowRankError, SvdTriple, svd

logger = logging.getLogger(__name__)

WEIGHT_POWERS = (-2, -1, 0, 1)


class PowerMode(str, Enum):
    """Итоговая степень весов в подпространстве решения: W⁻² для GKB, W⁻¹ для Арнольди."""
    GKB = 'gkb'
    ARNOLDI = 'arnoldi'

    @property
    def net_power(self) -> int:
        return -2 if self is PowerMode.GKB else -1


class Direction(str, Enum):
    S = 'S'                      # W^q S v
    S_TRANSPOSE = 'S_transpose'  # Sᵀ W^q v
    CONJUGATE = 'conjugate'      # Sᵀ W^q S v


@frozen(eq=False)
class Reweighter:
    """
    Пара (W, S) в неявном виде: S = V_Xᵀ ⊗ U_Xᵀ, W = I ⊗ diag(w).

    Хранятся SVD-множители и диагональ W⁻¹; матрицы N×N не строятся.

    Attributes:
        svd (SvdTriple): SVD текущего приближения (или базисного вектора).
        p (float): Показатель Шаттена.
        gamma (float): Сглаживающий параметр.
        power_mode (PowerMode): Итоговая степень весов.
        inverse_weights (np.ndarray): Диагональ W⁻¹ длины n.
    """
    svd: SvdTriple
    p: float
    gamma: float
    power_mode: PowerMode
    inverse_weights: np.ndarray

    @property
    def n(self) -> int:
        return self.svd.n

    @property
    def weights(self) -> np.ndarray:
        with np.errstate(divide='ignore'):
            return 1.0 / self.inverse_weights

    def diagonal(self, weight_power: int) -> np.ndarray:
        """Диагональ W^q."""
        if weight_power not in WEIGHT_POWERS:
            logger.error(f"weight_power={weight_power} не из {WEIGHT_POWERS}")
            raise LowRankError(f"weight_power должно быть из {WEIGHT_POWERS}, получено {weight_power}")
        with np.errstate(divide='ignore'):
            d = self.inverse_weights ** float(-weight_power)
        if not np.all(np.isfinite(d)):
            logger.error("Веса W^q содержат бесконечности")
            raise LowRankError(f"W^{weight_power} не определена: нулевые обратные веса")
        return d

    @classmethod
    def identity(
        cls, n: int, p: float = 1.0, gamma: float = 1.0,
        power_mode: Union[PowerMode, str] = PowerMode.GKB,
    ) -> 'Reweighter':
        """Начальная пара W₀ = I, S₀ = I."""
        eye = np.eye(n)
        return cls(SvdTriple(eye, np.ones(n), eye), p, gamma, PowerMode(power_mode), np.ones(n))


def _check_parameters(p: float, gamma: float) -> None:
    if gamma <= 0:
        logger.error(f"gamma={gamma} <= 0")
        raise LowRankError(f"gamma должно быть > 0, получено {gamma}")
    if not 0 < p <= 1:
        logger.error(f"p={p} вне (0, 1]")
        raise LowRankError(f"p должно лежать в (0, 1], получено {p}")


def build_reweighter(
    Xk: np.ndarray, p: float, gamma: float, power_mode: Union[PowerMode, str] = PowerMode.GKB,
) -> Reweighter:
    """
    Строит (W, S) по текущему приближению X_k.

    Веса (σ_i² + γ)^{p/4 − 1/2}; хранится обратная диагональ (σ_i² + γ)^{1/2 − p/4}.

    Args:
        Xk (np.ndarray): Текущее приближение n×n.
        p (float): Показатель Шаттена.
        gamma (float): Сглаживающий параметр (> 0).
        power_mode (PowerMode): gkb или arnoldi.

    Returns:
        Reweighter: Неявная пара (W, S).
    """
    _check_parameters(p, gamma)
    triple = svd(Xk)
    inverse = (triple.sigma ** 2 + gamma) ** (0.5 - p / 4.0)
    return Reweighter(triple, p, gamma, PowerMode(power_mode), inverse)


def build_reweighter_from_basis(
    v_i: np.ndarray, p: float, gamma: float, power_mode: Union[PowerMode, str] = PowerMode.ARNOLDI,
) -> Reweighter:
    """
    Вариант «(v)»: (W, S) по SVD базисного вектора unvec(v_i).

    Обратные веса σ_i^{1/2 − p/4} берутся от самих сингулярных чисел, без γ,
    так что Sᵀ W⁻¹ S v_i = vec(U Σ^{3/2 − p/4} Vᵀ).

    Raises:
        LowRankError: Нулевой вектор.
    """
    _check_parameters(p, gamma)
    v_i = np.asarray(v_i, dtype=float).reshape(-1)
    if not np.any(v_i):
        logger.error("build_reweighter_from_basis: нулевой вектор")
        raise LowRankError("Базисный вектор не может быть нулевым")
    n = side_of(v_i.size)
    if n is None:
        raise LowRankError(f"Ожидался вектор длины n², получено {v_i.size}")
    triple = svd(unvec(v_i, n))
    inverse = triple.sigma ** (0.5 - p / 4.0)
    return Reweighter(triple, p, gamma, PowerMode(power_mode), inverse)


def apply_transform(
    rw: Reweighter, v: np.ndarray, direction: Union[Direction, str], weight_power: int = 0,
) -> np.ndarray:
    """
    Действие S, Sᵀ и W^q за O(n³) через тройные произведения матриц n×n.

    Args:
        rw (Reweighter): Пара (W, S).
        v (np.ndarray): Вектор длины n².
        direction (Direction): S → W^q S v; S_transpose → Sᵀ W^q v; conjugate → Sᵀ W^q S v.
        weight_power (int): q из {−2, −1, 0, 1}.

    Returns:
        np.ndarray: Вектор длины n².

    Raises:
        LowRankError: Неверная длина вектора или степень.
    """
    direction = Direction(direction)
    n = rw.n
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != n * n:
        logger.error(f"apply_transform: ожидалась длина {n * n}, получено {v.size}")
        raise LowRankError(f"apply_transform: ожидался вектор длины {n * n}, получено {v.size}")
    d = rw.diagonal(weight_power)[:, None]
    U, V = rw.svd.U, rw.svd.V
    C = unvec(v, n)
    if direction is Direction.S:
        return vec(d * (U.T @ C @ V))
    if direction is Direction.S_TRANSPOSE:
        return vec(U @ (d * C) @ V.T)
    return vec(U @ (d * (U.T @ C @ V)) @ V.T)


def preconditioner_action(rw: Reweighter, v: np.ndarray) -> np.ndarray:
    """Sᵀ W^{net} S v с итоговой степенью режима (−2 для GKB, −1 для Арнольди)."""
    return apply_transform(rw, v, Direction.CONJUGATE, rw.power_mode.net_power)
