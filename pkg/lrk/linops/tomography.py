# lrk/linops/tomography.py

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import sparse

from lrk.linops.operators import ImagingOperator, OperatorKind
from lrk.linops.vectorize import OperatorError

logger = logging.getLogger(__name__)

# Касания границ пикселей короче этого порога не учитываются
_MIN_CHORD = 1e-12


def _ray_chords(n: int, origin: np.ndarray, direction: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Пересечения одного луча с сеткой пикселей (метод Сиддона).

    Сетка занимает квадрат [-n/2, n/2]², пиксели единичные, строка 0 сверху.

    Returns:
        Tuple[np.ndarray, np.ndarray]: Индексы пикселей (по столбцам) и длины хорд.
    """
    half = n / 2.0
    t_low, t_high = -np.inf, np.inf
    crossings = []
    for axis in range(2):
        if abs(direction[axis]) < 1e-15:
            if not -half <= origin[axis] <= half:
                return np.empty(0, dtype=int), np.empty(0)
            continue
        planes = np.arange(n + 1, dtype=float) - half
        t_planes = (planes - origin[axis]) / direction[axis]
        t_low = max(t_low, t_planes.min())
        t_high = min(t_high, t_planes.max())
        crossings.append(t_planes)
    if not crossings or t_high - t_low <= _MIN_CHORD:
        return np.empty(0, dtype=int), np.empty(0)

    t = np.concatenate(crossings + [np.array([t_low, t_high])])
    t = np.unique(t[(t >= t_low) & (t <= t_high)])
    lengths = np.diff(t)
    keep = lengths > _MIN_CHORD
    mid = 0.5 * (t[1:] + t[:-1])[keep]
    lengths = lengths[keep]

    x = origin[0] + mid * direction[0]
    y = origin[1] + mid * direction[1]
    cols = np.clip(np.floor(x + half).astype(int), 0, n - 1)
    rows = np.clip(np.floor(half - y).astype(int), 0, n - 1)
    return rows + cols * n, lengths


def tomography_operator(
    n: int,
    angles: Sequence[float],
    detector_count: int,
    detector_spacing: float = 1.0,
) -> ImagingOperator:
    """
    Параллельно-лучевая томография: строка матрицы содержит длины хорд одного луча.

    Для угла θ детектор направлен вдоль (cos θ, sin θ), лучи идут вдоль (−sin θ, cos θ).
    Строки упорядочены как angle_index·detector_count + detector_index.

    Args:
        n (int): Сторона изображения.
        angles (Sequence[float]): Углы проекций в радианах.
        detector_count (int): Число детекторов на угол.
        detector_spacing (float): Шаг детекторов в пикселях.

    Returns:
        ImagingOperator: Оператор вида tomography размера (|angles|·detector_count)×n².

    Raises:
        OperatorError: Пустой список углов или detector_count < 1.
    """
    angles = np.asarray(angles, dtype=float).reshape(-1)
    if angles.size == 0:
        logger.error("Пустой список углов томографии")
        raise OperatorError("angles: требуется хотя бы один угол")
    if detector_count < 1:
        logger.error(f"detector_count={detector_count}")
        raise OperatorError(f"detector_count должен быть >= 1, получено {detector_count}")

    offsets = (np.arange(detector_count) - (detector_count - 1) / 2.0) * detector_spacing
    row_idx, col_idx, values = [], [], []
    for a, theta in enumerate(angles):
        axis = np.array([np.cos(theta), np.sin(theta)])
        direction = np.array([-np.sin(theta), np.cos(theta)])
        for d, s in enumerate(offsets):
            pixels, lengths = _ray_chords(n, s * axis, direction)
            row_idx.append(np.full(pixels.size, a * detector_count + d))
            col_idx.append(pixels)
            values.append(lengths)

    M, N = angles.size * detector_count, n * n
    matrix = sparse.csr_matrix(
        (np.concatenate(values), (np.concatenate(row_idx), np.concatenate(col_idx))),
        shape=(M, N),
    )
    matrix_t = matrix.T.tocsr()
    logger.info(f"Матрица томографии {M}x{N}, ненулевых {matrix.nnz}")
    return ImagingOperator(
        (M, N), lambda x: matrix @ x, lambda y: matrix_t @ y, OperatorKind.TOMOGRAPHY, n,
        params={'angles': angles.tolist(), 'detector_count': detector_count,
                'detector_spacing': detector_spacing},
    )


def limited_angles(span_degrees: float, n_angles: int, start_degrees: float = 0.0) -> np.ndarray:
    """Равномерные углы на отрезке [start, start + span) в радианах."""
    return np.deg2rad(start_degrees + np.linspace(0.0, span_degrees, n_angles, endpoint=False))


def default_detector_count(n: int, detector_spacing: Optional[float] = 1.0) -> int:
    """Число детекторов, покрывающее диагональ изображения."""
    return int(np.ceil(n * np.sqrt(2.0) / (detector_spacing or 1.0)))
