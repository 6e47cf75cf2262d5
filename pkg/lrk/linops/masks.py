# lrk/linops/masks.py

import logging

import numpy as np

from lrk.linops.vectorize import OperatorError, vec

logger = logging.getLogger(__name__)


def _check_fraction(missing_fraction: float) -> None:
    if not 0.0 <= missing_fraction < 1.0:
        logger.error(f"missing_fraction={missing_fraction} вне [0, 1)")
        raise OperatorError(f"missing_fraction должна лежать в [0, 1), получено {missing_fraction}")


def random_mask(n: int, missing_fraction: float, seed: int) -> np.ndarray:
    """
    Случайная маска: ровно ⌈(1 − missing_fraction)·n²⌉ сохранённых пикселей.

    Args:
        n (int): Сторона изображения.
        missing_fraction (float): Доля удаляемых пикселей, [0, 1).
        seed (int): Зерно генератора.

    Returns:
        np.ndarray: Булев вектор длины n² (порядок по столбцам).
    """
    _check_fraction(missing_fraction)
    N = n * n
    kept = int(np.ceil((1.0 - missing_fraction) * N - 1e-9))
    rng = np.random.default_rng(seed)
    mask = np.zeros(N, dtype=bool)
    mask[rng.permutation(N)[:kept]] = True
    return mask


def structured_mask(n: int, missing_fraction: float, seed: int) -> np.ndarray:
    """
    Структурированная маска: удаляются случайные прямоугольники и круги,
    пока доля удалённых пикселей не достигнет missing_fraction.
    """
    _check_fraction(missing_fraction)
    rng = np.random.default_rng(seed)
    image = np.ones((n, n), dtype=bool)
    rows, cols = np.mgrid[0:n, 0:n]
    low, high = max(1, n // 32), max(2, n // 8)
    while 1.0 - image.mean() < missing_fraction:
        r0, c0 = rng.integers(0, n, size=2)
        size = rng.integers(low, high + 1)
        if rng.random() < 0.5:
            image[r0:r0 + size, c0:c0 + rng.integers(low, high + 1)] = False
        else:
            image[(rows - r0) ** 2 + (cols - c0) ** 2 <= size ** 2] = False
    logger.debug(f"Структурированная маска: удалено {1.0 - image.mean():.3f}")
    return vec(image.astype(float)).astype(bool)
