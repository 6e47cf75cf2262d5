# lrk/lowrank/svd_tools.py

import logging
from typing import Optional, Tuple

import numpy as np
from attrs import frozen

from lrk.linops.vectorize import side_of, unvec, vec

logger = logging.getLogger(__name__)


class LowRankError(ValueError):
    """Исключение, возникающее при ошибках низкоранговых операций."""
    pass


@frozen(eq=False)
class SvdTriple:
    """
    Полное SVD квадратной матрицы X = U·diag(sigma)·Vᵀ.

    Знак фиксирован: наибольший по модулю элемент каждого столбца U положителен.
    """
    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray

    @property
    def n(self) -> int:
        return self.sigma.size

    def reconstruct(self, sigma: Optional[np.ndarray] = None) -> np.ndarray:
        """U·diag(sigma)·Vᵀ, по умолчанию с собственными сингулярными числами."""
        values = self.sigma if sigma is None else sigma
        return (self.U * values) @ self.V.T


def svd(X: np.ndarray) -> SvdTriple:
    """
    Полное SVD с детерминированным выбором знаков.

    Args:
        X (np.ndarray): Квадратная матрица n×n.

    Returns:
        SvdTriple: Сингулярные векторы и числа (по невозрастанию).

    Raises:
        LowRankError: Нечисловые элементы или неквадратная матрица.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        logger.error(f"svd: ожидалась квадратная матрица, получено {X.shape}")
        raise LowRankError(f"svd: ожидалась матрица n×n, получено {X.shape}")
    if not np.all(np.isfinite(X)):
        logger.error("svd: матрица содержит inf/nan")
        raise LowRankError("svd: матрица содержит нечисловые элементы")
    U, sigma, Vt = np.linalg.svd(X)
    V = Vt.T
    pivots = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[pivots, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return SvdTriple(U * signs, sigma, V * signs)


def _checked_square(c: np.ndarray) -> Tuple[np.ndarray, int]:
    c = np.asarray(c, dtype=float).reshape(-1)
    n = side_of(c.size)
    if n is None:
        logger.error(f"Длина {c.size} не является квадратом")
        raise LowRankError(f"Ожидался вектор длины n², получено {c.size}")
    return c, n


def truncate(c: np.ndarray, kappa: int) -> np.ndarray:
    """
    Оператор усечения τ_κ: лучшее приближение ранга κ для unvec(c).

    Args:
        c (np.ndarray): Вектор длины n².
        kappa (int): Ранг, 1 <= κ <= n.

    Returns:
        np.ndarray: vec(U_κ Σ_κ V_κᵀ).

    Raises:
        LowRankError: κ вне диапазона.
    """
    c, n = _checked_square(c)
    if not 1 <= kappa <= n:
        logger.error(f"truncate: kappa={kappa} вне [1, {n}]")
        raise LowRankError(f"kappa должно лежать в [1, {n}], получено {kappa}")
    triple = svd(unvec(c, n))
    kept = triple.sigma.copy()
    kept[kappa:] = 0.0
    return vec(triple.reconstruct(kept))


def shrink(X: np.ndarray, tau: float) -> np.ndarray:
    """Оператор мягкого порога сингулярных чисел D_τ(X) = U·max(Σ − τ, 0)·Vᵀ."""
    if tau < 0:
        logger.error(f"shrink: tau={tau} < 0")
        raise LowRankError(f"tau должно быть >= 0, получено {tau}")
    triple = svd(X)
    return triple.reconstruct(np.maximum(triple.sigma - tau, 0.0))


def _check_schatten(p: float, gamma: float) -> None:
    if gamma <= 0:
        logger.error(f"smooth_schatten: gamma={gamma} <= 0")
        raise LowRankError(f"gamma должно быть > 0, получено {gamma}")
    if not 0 < p <= 1:
        logger.error(f"smooth_schatten: p={p} вне (0, 1]")
        raise LowRankError(f"p должно лежать в (0, 1], получено {p}")


def smooth_schatten(X: np.ndarray, p: float, gamma: float) -> float:
    """Гладкая функция Шаттена: Σ_i (σ_i² + γ)^{p/2}."""
    _check_schatten(p, gamma)
    sigma = svd(X).sigma
    return float(np.sum((sigma ** 2 + gamma) ** (p / 2.0)))


def smooth_schatten_gradient(X: np.ndarray, p: float, gamma: float) -> np.ndarray:
    """
    Градиент гладкой функции Шаттена p·(X Xᵀ + γI)^{p/2−1}·X через SVD.

    Returns:
        np.ndarray: Матрица n×n.
    """
    _check_schatten(p, gamma)
    triple = svd(X)
    scale = p * (triple.sigma ** 2 + gamma) ** (p / 2.0 - 1.0) * triple.sigma
    return triple.reconstruct(scale)


def nuclear_norm(X: np.ndarray) -> float:
    return float(np.sum(svd(X).sigma))


def numerical_rank(x: np.ndarray, rtol: float = 1e-10) -> int:
    """Число сингулярных чисел unvec(x), больших rtol·σ₁."""
    c, n = _checked_square(x)
    sigma = svd(unvec(c, n)).sigma
    if sigma[0] == 0:
        return 0
    return int(np.sum(sigma > rtol * sigma[0]))


def normalized_singular_values(x: np.ndarray) -> np.ndarray:
    """
    Сингулярные числа unvec(x), делённые на наибольшее.

    Для вектора, длина которого не квадрат, возвращается пустой массив,
    для нулевого вектора нули.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    n = side_of(x.size)
    if n is None:
        return np.empty(0)
    sigma = svd(unvec(x, n)).sigma
    if sigma[0] == 0:
        return np.zeros_like(sigma)
    return sigma / sigma[0]
