# lrk/linops/operators.py

import logging
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np
from scipy import ndimage
from scipy.linalg import toeplitz
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from lrk.linops.vectorize import OperatorError, side_of, unvec, vec

logger = logging.getLogger(__name__)

Vector = Callable[[np.ndarray], np.ndarray]


class OperatorKind(str, Enum):
    BLUR = 'blur'
    TOMOGRAPHY = 'tomography'
    INPAINTING = 'inpainting'
    DENSE = 'explicit-dense'
    COMPOSITE = 'composite'


class ImagingOperator(LinearOperator):
    """
    Безматричный линейный оператор прямой задачи с метаданными изображения.

    Совместим с scipy.sparse.linalg: matvec/rmatvec, A @ x, A.T.
    Неизменяем после построения, поэтому безопасен для общих потоков.
    """

    def __init__(
        self,
        shape: Tuple[int, int],
        forward: Vector,
        adjoint: Vector,
        kind: Union[OperatorKind, str],
        image_side: Optional[int] = None,
        params: Optional[Dict[str, Any]] = None,
    ) -> None:
        """
        Инициализирует ImagingOperator.

        Args:
            shape (Tuple[int, int]): Размер (M, N).
            forward (Callable): Отображение R^N → R^M.
            adjoint (Callable): Отображение R^M → R^N.
            kind (OperatorKind): Тип оператора.
            image_side (Optional[int]): Сторона изображения n, n² = N.
            params (Optional[Dict[str, Any]]): Параметры построения (для выгрузки задач).
        """
        super().__init__(dtype=np.dtype(float), shape=tuple(int(s) for s in shape))
        self._forward = forward
        self._backward = adjoint
        self.kind = OperatorKind(kind)
        self.image_side = image_side if image_side is not None else side_of(self.shape[1])
        self.params: Dict[str, Any] = dict(params or {})

    @property
    def rows(self) -> int:
        return self.shape[0]

    @property
    def cols(self) -> int:
        return self.shape[1]

    def _matvec(self, x: np.ndarray) -> np.ndarray:
        return self._forward(np.asarray(x, dtype=float).reshape(-1))

    def _rmatvec(self, y: np.ndarray) -> np.ndarray:
        return self._backward(np.asarray(y, dtype=float).reshape(-1))

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Вычисляет A x с проверкой размера."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.cols,):
            logger.error(f"apply: ожидалась длина {self.cols}, получено {x.shape}")
            raise OperatorError(f"apply: ожидался вектор длины {self.cols}, получено {x.shape}")
        return self._forward(x)

    def apply_adjoint(self, y: np.ndarray) -> np.ndarray:
        """Вычисляет Aᵀ y с проверкой размера."""
        y = np.asarray(y, dtype=float)
        if y.shape != (self.rows,):
            logger.error(f"apply_adjoint: ожидалась длина {self.rows}, получено {y.shape}")
            raise OperatorError(f"apply_adjoint: ожидался вектор длины {self.rows}, получено {y.shape}")
        return self._backward(y)

    def to_dense(self) -> np.ndarray:
        """Собирает плотную матрицу по столбцам A e_j (только для малых n)."""
        dense = np.empty(self.shape)
        basis = np.zeros(self.cols)
        for j in range(self.cols):
            basis[j] = 1.0
            dense[:, j] = self._forward(basis)
            basis[j] = 0.0
        return dense

    def export_dense(self, path: Union[str, Path]) -> Path:
        """
        Записывает плотную матрицу в текстовый файл: строка матрицы на строку файла,
        17 значащих цифр.
        """
        path = Path(path)
        np.savetxt(path, self.to_dense(), fmt='%.17g')
        logger.info(f"Плотная матрица {self.shape} записана в {path}")
        return path

    def __repr__(self) -> str:
        return f"ImagingOperator(kind={self.kind.value}, shape={self.shape}, n={self.image_side})"


def gaussian_blur_matrix(n: int, sigma: float, bandwidth: int) -> np.ndarray:
    """
    Одномерная ленточная тёплицева матрица гауссова размытия с нормировкой строк.

    Raises:
        OperatorError: Если sigma <= 0 или bandwidth вне [0, n].
    """
    if sigma <= 0:
        logger.error(f"Неположительная sigma={sigma}")
        raise OperatorError(f"sigma должна быть > 0, получено {sigma}")
    if not 0 <= bandwidth <= n:
        logger.error(f"bandwidth={bandwidth} вне диапазона [0, {n}]")
        raise OperatorError(f"bandwidth должен лежать в [0, {n}], получено {bandwidth}")
    column = np.exp(-np.arange(n, dtype=float) ** 2 / (2.0 * sigma ** 2))
    column[bandwidth + 1:] = 0.0
    blur = toeplitz(column)
    return blur / blur.sum(axis=1, keepdims=True)


def gaussian_blur_operator(n: int, sigma: float, bandwidth: int) -> ImagingOperator:
    """
    Разделимое гауссово размытие A = A_c ⊗ A_r с нулевыми граничными условиями.

    Применяется как X ↦ A_r X A_cᵀ, без построения матрицы N×N.

    Args:
        n (int): Сторона изображения.
        sigma (float): Ширина гауссианы в пикселях.
        bandwidth (int): Полуширина ленты.

    Returns:
        ImagingOperator: Оператор вида blur.
    """
    A_r = gaussian_blur_matrix(n, sigma, bandwidth)
    A_c = A_r

    def forward(x: np.ndarray) -> np.ndarray:
        return vec(A_r @ unvec(x, n) @ A_c.T)

    def adjoint(y: np.ndarray) -> np.ndarray:
        return vec(A_r.T @ unvec(y, n) @ A_c)

    logger.debug(f"Гауссово размытие: n={n}, sigma={sigma}, bandwidth={bandwidth}")
    return ImagingOperator(
        (n * n, n * n), forward, adjoint, OperatorKind.BLUR, n,
        params={'blur': 'gaussian', 'sigma': sigma, 'bandwidth': bandwidth},
    )


def identity_operator(n: int) -> ImagingOperator:
    """Размытие нулевой ширины, то есть тождественный оператор."""
    return gaussian_blur_operator(n, sigma=1.0, bandwidth=0)


def shaking_psf(length: int, seed: int) -> np.ndarray:
    """
    PSF «дрожания камеры»: траектория случайного блуждания на решётке.

    Args:
        length (int): Число шагов блуждания.
        seed (int): Зерно генератора.

    Returns:
        np.ndarray: Ядро нечётного размера с суммой 1.
    """
    if length < 0:
        raise OperatorError(f"length должно быть >= 0, получено {length}")
    rng = np.random.default_rng(seed)
    steps = rng.integers(-1, 2, size=(length, 2))
    path = np.vstack([np.zeros((1, 2), dtype=int), np.cumsum(steps, axis=0)])
    radius = int(np.abs(path).max())
    psf = np.zeros((2 * radius + 1, 2 * radius + 1))
    np.add.at(psf, (path[:, 0] + radius, path[:, 1] + radius), 1.0)
    return psf / psf.sum()


def shaking_blur_operator(n: int, length: int = 6, seed: int = 0) -> ImagingOperator:
    """Неразделимое размытие случайным PSF, свёртка с нулевой границей."""
    psf = shaking_psf(length, seed)

    def forward(x: np.ndarray) -> np.ndarray:
        return vec(ndimage.convolve(unvec(x, n), psf, mode='constant', cval=0.0))

    def adjoint(y: np.ndarray) -> np.ndarray:
        return vec(ndimage.correlate(unvec(y, n), psf, mode='constant', cval=0.0))

    logger.debug(f"Размытие дрожанием: n={n}, length={length}, psf {psf.shape}")
    return ImagingOperator(
        (n * n, n * n), forward, adjoint, OperatorKind.BLUR, n,
        params={'blur': 'shaking', 'length': length, 'seed': seed},
    )


def dense_operator(matrix: np.ndarray, image_side: Optional[int] = None) -> ImagingOperator:
    """Оператор из явной плотной матрицы."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2:
        raise OperatorError(f"Ожидалась двумерная матрица, получено {matrix.shape}")
    return ImagingOperator(
        matrix.shape, lambda x: matrix @ x, lambda y: matrix.T @ y, OperatorKind.DENSE, image_side,
    )


def normal_equations_operator(op: LinearOperator) -> ImagingOperator:
    """Оператор AᵀA для решения нормальных уравнений квадратными методами."""
    A = aslinearoperator(op)
    n = getattr(op, 'image_side', None)

    def gram(x: np.ndarray) -> np.ndarray:
        return A.rmatvec(A.matvec(x))

    return ImagingOperator((A.shape[1], A.shape[1]), gram, gram, OperatorKind.COMPOSITE, n)


def inpainting_operator(n: int, mask: np.ndarray, blur: LinearOperator) -> ImagingOperator:
    """
    Оператор восстановления изображения: сначала размытие, затем выбор известных пикселей.

    Args:
        n (int): Сторона изображения.
        mask (np.ndarray): Булев вектор длины n², True для сохранённых пикселей.
        blur (LinearOperator): Оператор размытия n²×n².

    Returns:
        ImagingOperator: Оператор вида inpainting размера M×n², M = mask.sum().

    Raises:
        OperatorError: Несогласованные размеры или пустая маска.
    """
    N = n * n
    mask = np.asarray(mask, dtype=bool).reshape(-1)
    if mask.size != N:
        logger.error(f"Маска длины {mask.size}, ожидалось {N}")
        raise OperatorError(f"mask: ожидалась длина {N}, получено {mask.size}")
    if blur.shape != (N, N):
        logger.error(f"Размытие размера {blur.shape}, ожидалось {(N, N)}")
        raise OperatorError(f"blur: ожидался размер {(N, N)}, получено {blur.shape}")
    if not mask.any():
        logger.error("Маска не содержит ни одного пикселя")
        raise OperatorError("mask: не выбрано ни одного пикселя")
    A_blur = aslinearoperator(blur)
    kept = np.flatnonzero(mask)

    def forward(x: np.ndarray) -> np.ndarray:
        return A_blur.matvec(x)[kept]

    def adjoint(y: np.ndarray) -> np.ndarray:
        scattered = np.zeros(N)
        scattered[kept] = y
        return A_blur.rmatvec(scattered)

    params = {'mask_kept': int(kept.size)}
    params.update(getattr(blur, 'params', {}))
    return ImagingOperator((kept.size, N), forward, adjoint, OperatorKind.INPAINTING, n, params=params)
