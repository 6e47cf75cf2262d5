# lrk/krylov/projected.py

import logging
from typing import Tuple

import numpy as np

from lrk.krylov.factorizations import FactorizationError

logger = logging.getLogger(__name__)


def projected_tikhonov(H: np.ndarray, beta: float, lambda_hat: float = 0.0) -> Tuple[np.ndarray, float]:
    """
    Проекционная задача Тихонова: y = argmin ‖H y − β e₁‖² + λ̂‖y‖².

    Решается как задача наименьших квадратов для блочной матрицы [H; √λ̂ I];
    при λ̂ = 0 и вырожденной H берётся решение минимальной нормы.

    Args:
        H (np.ndarray): Проекционная матрица (k+1)×k.
        beta (float): Норма начального вектора.
        lambda_hat (float): Параметр регуляризации λ̂ >= 0.

    Returns:
        Tuple[np.ndarray, float]: y длины k и проекционная невязка ‖H y − β e₁‖₂.

    Raises:
        FactorizationError: Отрицательный λ̂.
    """
    if lambda_hat < 0:
        logger.error(f"projected_tikhonov: lambda_hat={lambda_hat} < 0")
        raise FactorizationError(f"lambda_hat должно быть >= 0, получено {lambda_hat}")
    H = np.asarray(H, dtype=float)
    rows, k = H.shape
    rhs = np.zeros(rows)
    rhs[0] = beta
    if k == 0:
        return np.zeros(0), float(abs(beta))
    if lambda_hat > 0:
        stacked = np.vstack([H, np.sqrt(lambda_hat) * np.eye(k)])
        y = np.linalg.lstsq(stacked, np.concatenate([rhs, np.zeros(k)]), rcond=None)[0]
    else:
        y = np.linalg.lstsq(H, rhs, rcond=None)[0]
    return y, float(np.linalg.norm(H @ y - rhs))
