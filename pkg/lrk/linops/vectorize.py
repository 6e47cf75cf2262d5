# lrk/linops/vectorize.py

import logging
from math import isqrt
from typing import Optional

import numpy as np

logger = logging.getLogger(__name__)


class OperatorError(ValueError):
    """Исключение, возникающее при неверных размерах или параметрах операторов."""
    pass


def side_of(length: int) -> Optional[int]:
    """Сторона квадратного изображения для вектора длины length или None."""
    n = isqrt(length)
    return n if n * n == length else None


def vec(X: np.ndarray) -> np.ndarray:
    """
    Разворачивает квадратное изображение в вектор по столбцам.

    Args:
        X (np.ndarray): Матрица n×n.

    Returns:
        np.ndarray: Вектор длины n².

    Raises:
        OperatorError: Если матрица не квадратная.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        logger.error(f"vec: ожидалась квадратная матрица, получено {X.shape}")
        raise OperatorError(f"vec: ожидалась матрица n×n, получено {X.shape}")
    return X.reshape(-1, order='F')


def unvec(x: np.ndarray, n: int) -> np.ndarray:
    """
    Собирает вектор длины n² обратно в изображение n×n (по столбцам).

    Raises:
        OperatorError: Если длина вектора не равна n².
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != n * n:
        logger.error(f"unvec: ожидалась длина {n * n}, получено {x.shape}")
        raise OperatorError(f"unvec: ожидался вектор длины {n * n} (n={n}), получено {x.shape}")
    return x.reshape((n, n), order='F')


def unvec_square(x: np.ndarray) -> np.ndarray:
    """unvec с выводом стороны изображения из длины вектора."""
    x = np.asarray(x, dtype=float).ravel()
    n = side_of(x.size)
    if n is None:
        logger.error(f"Длина вектора {x.size} не является квадратом")
        raise OperatorError(f"Длина вектора {x.size} не является квадратом целого числа")
    return unvec(x, n)
