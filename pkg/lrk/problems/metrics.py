# lrk/problems/metrics.py

import logging
from typing import Optional

import numpy as np

from lrk.lowrank.svd_tools import normalized_singular_values

logger = logging.getLogger(__name__)

# значения ниже порога не выгружаются в CSV спектров
SPECTRUM_CUTOFF = 1e-3


class ProblemError(ValueError):
    """Исключение, возникающее при неверных параметрах тестовых задач."""
    pass


def relative_error(x: np.ndarray, x_exact: np.ndarray) -> float:
    """
    Относительная ошибка ‖x_exact − x‖₂ / ‖x_exact‖₂.

    Raises:
        ProblemError: Нулевое точное решение или разные длины.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    x_exact = np.asarray(x_exact, dtype=float).reshape(-1)
    if x.size != x_exact.size:
        logger.error(f"relative_error: длины {x.size} и {x_exact.size}")
        raise ProblemError(f"Длины векторов не совпадают: {x.size} и {x_exact.size}")
    norm = float(np.linalg.norm(x_exact))
    if norm == 0:
        logger.error("relative_error: нулевое точное решение")
        raise ProblemError("Точное решение не может быть нулевым")
    return float(np.linalg.norm(x_exact - x) / norm)


def normalized_spectrum(x: np.ndarray, cutoff: Optional[float] = SPECTRUM_CUTOFF) -> np.ndarray:
    """Сингулярные числа unvec(x), делённые на наибольшее; значения ниже cutoff отбрасываются."""
    spectrum = normalized_singular_values(x)
    if cutoff is None:
        return spectrum
    return spectrum[spectrum >= cutoff]
