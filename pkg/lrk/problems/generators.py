# lrk/problems/generators.py

import logging
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np
from attrs import define, field
from scipy.sparse.linalg import LinearOperator

from lrk.linops import (
    OperatorError, default_detector_count, gaussian_blur_operator, identity_operator,
    inpainting_operator, limited_angles, random_mask, shaking_blur_operator, structured_mask,
    tomography_operator, vec,
)
from lrk.lowrank.svd_tools import truncate
from lrk.problems.images import phantom_image, source_image, star_image
from lrk.problems.metrics import ProblemError

logger = logging.getLogger(__name__)


@define(eq=False)
class TestProblem:
    """
    Тестовая задача b = A x_exact + η.

    Attributes:
        name (str): Имя генератора (star, phantom, inpainting).
        op (LinearOperator): Оператор прямой задачи.
        b (np.ndarray): Зашумлённые данные.
        b_exact (np.ndarray): Точные данные A x_exact.
        x_exact (np.ndarray): Точное изображение (вектор длины n²).
        noise_level (float): ‖η‖₂ / ‖b_exact‖₂.
        seed (int): Зерно генератора.
        params (Dict[str, Any]): Аргументы генератора, по которым задача воспроизводится.
    """
    __test__ = False

    name: str
    op: LinearOperator
    b: np.ndarray
    b_exact: np.ndarray
    x_exact: np.ndarray
    noise_level: float
    seed: int
    params: Dict[str, Any] = field(factory=dict)

    @property
    def n(self) -> int:
        return int(round(np.sqrt(self.x_exact.size)))

    @property
    def epsilon(self) -> float:
        """Норма шума ‖b − b_exact‖₂."""
        return float(np.linalg.norm(self.b - self.b_exact))


def _seeds(seed: int, count: int) -> Tuple[int, ...]:
    """Независимые зёрна для маски, размытия и шума."""
    return tuple(int(s) for s in np.random.SeedSequence(seed).generate_state(count))


def add_noise(b_exact: np.ndarray, noise_level: float, seed: int) -> np.ndarray:
    """
    Гауссов белый шум, отмасштабированный до ‖η‖₂ = noise_level·‖b_exact‖₂.

    Raises:
        ProblemError: Отрицательный уровень шума.
    """
    if noise_level < 0:
        logger.error(f"noise_level={noise_level} < 0")
        raise ProblemError(f"noise_level должен быть >= 0, получено {noise_level}")
    b_exact = np.asarray(b_exact, dtype=float)
    if noise_level == 0:
        return b_exact.copy()
    eta = np.random.default_rng(seed).standard_normal(b_exact.size)
    eta *= noise_level * np.linalg.norm(b_exact) / np.linalg.norm(eta)
    return b_exact + eta


def _assemble(
    name: str, op: LinearOperator, x_exact: np.ndarray, noise_level: float, seed: int,
    noise_seed: int, params: Dict[str, Any],
) -> TestProblem:
    b_exact = op.matvec(x_exact)
    b = add_noise(b_exact, noise_level, noise_seed)
    logger.info(f"Задача {name}: A {op.shape}, шум {noise_level}, seed {seed}")
    return TestProblem(name, op, b, b_exact, x_exact, float(noise_level), int(seed), params)


def _check_side(n: int, minimum: int = 2) -> None:
    if n < minimum:
        logger.error(f"n={n} < {minimum}")
        raise ProblemError(f"n должно быть >= {minimum}, получено {n}")


def star_problem(
    n: int = 64,
    noise_level: float = 1e-3,
    sigma_blur: float = 2.0,
    seed: int = 0,
    bandwidth: Optional[int] = None,
) -> TestProblem:
    """
    Двойная звезда ранга 2 под гауссовым размытием.

    Args:
        n (int): Сторона изображения, не меньше 16.
        noise_level (float): Относительный уровень шума.
        sigma_blur (float): Ширина гауссова ядра в пикселях.
        seed (int): Зерно шума.
        bandwidth (Optional[int]): Полуширина ленты (по умолчанию ⌈4σ⌉, не больше n).

    Returns:
        TestProblem: Задача star.
    """
    _check_side(n, 16)
    if bandwidth is None:
        bandwidth = min(int(np.ceil(4.0 * sigma_blur)), n)
    try:
        op = gaussian_blur_operator(n, sigma_blur, bandwidth)
    except OperatorError as e:
        raise ProblemError(f"star: {e}") from e
    params = {'n': n, 'noise_level': noise_level, 'sigma_blur': sigma_blur, 'seed': seed,
              'bandwidth': bandwidth}
    return _assemble('star', op, vec(star_image(n)), noise_level, seed, _seeds(seed, 1)[0], params)


def phantom_problem(
    n: int = 64,
    noise_level: float = 1e-2,
    angle_span_degrees: float = 90.0,
    n_angles: Optional[int] = None,
    seed: int = 0,
    detector_count: Optional[int] = None,
) -> TestProblem:
    """
    Гладкий фантом ранга 4 в томографии с ограниченным углом обзора.

    Углы равномерно покрывают [0, span), по умолчанию n // 2 углов и столько
    детекторов, сколько нужно для диагонали изображения.

    Raises:
        ProblemError: span вне (0, 180) или неверные размеры.
    """
    _check_side(n)
    if not 0 < angle_span_degrees < 180:
        logger.error(f"angle_span_degrees={angle_span_degrees} вне (0, 180)")
        raise ProblemError(f"angle_span_degrees должен лежать в (0, 180), получено {angle_span_degrees}")
    n_angles = n_angles or max(n // 2, 1)
    detector_count = detector_count or default_detector_count(n)
    try:
        op = tomography_operator(n, limited_angles(angle_span_degrees, n_angles), detector_count)
    except OperatorError as e:
        raise ProblemError(f"phantom: {e}") from e
    params = {'n': n, 'noise_level': noise_level, 'angle_span_degrees': angle_span_degrees,
              'n_angles': n_angles, 'seed': seed, 'detector_count': detector_count}
    return _assemble('phantom', op, vec(phantom_image(n)), noise_level, seed, _seeds(seed, 1)[0], params)


def _blur_for(kind: str, n: int, blur_sigma: float, shake_length: int, seed: int) -> LinearOperator:
    if kind == 'shaking':
        return shaking_blur_operator(n, shake_length, seed)
    if kind == 'gaussian':
        return gaussian_blur_operator(n, blur_sigma, min(int(np.ceil(4.0 * blur_sigma)), n))
    if kind == 'none':
        return identity_operator(n)
    logger.error(f"Неизвестное размытие {kind}")
    raise ProblemError(f"blur должно быть из ['gaussian', 'none', 'shaking'], получено {kind!r}")


def inpainting_problem(
    image: str = 'house-like',
    n: int = 64,
    rank_cap: Optional[int] = None,
    missing_fraction: float = 0.4,
    pattern: str = 'random',
    noise_level: float = 1e-2,
    seed: int = 0,
    blur: str = 'shaking',
    blur_sigma: float = 1.0,
    shake_length: int = 6,
    path: Union[str, Path, None] = None,
) -> TestProblem:
    """
    Восстановление изображения: сначала размытие, затем удаление пикселей.

    Args:
        image (str): house-like, peppers-like или file.
        n (int): Сторона изображения.
        rank_cap (Optional[int]): Ранг усечения исходного изображения (None без усечения).
        missing_fraction (float): Доля удалённых пикселей.
        pattern (str): random или structured.
        noise_level (float): Относительный уровень шума.
        seed (int): Зерно маски, PSF и шума.
        blur (str): shaking, gaussian или none.
        blur_sigma (float): Ширина гауссова размытия.
        shake_length (int): Длина траектории дрожания.
        path (Optional[Path]): Файл изображения для image='file'.

    Returns:
        TestProblem: Задача inpainting.

    Raises:
        ProblemError: rank_cap > n, неизвестные image/pattern/blur, нечитаемый файл.
    """
    _check_side(n)
    if rank_cap is not None and not 1 <= rank_cap <= n:
        logger.error(f"rank_cap={rank_cap} вне [1, {n}]")
        raise ProblemError(f"rank_cap должен лежать в [1, {n}], получено {rank_cap}")
    mask_seed, blur_seed, noise_seed = _seeds(seed, 3)
    x_exact = vec(source_image(image, n, path))
    if rank_cap is not None:
        x_exact = truncate(x_exact, rank_cap)

    masks: Dict[str, Callable[[int, float, int], np.ndarray]] = {
        'random': random_mask, 'structured': structured_mask,
    }
    if pattern not in masks:
        logger.error(f"Неизвестный шаблон маски {pattern}")
        raise ProblemError(f"pattern должно быть из {sorted(masks)}, получено {pattern!r}")
    try:
        mask = masks[pattern](n, missing_fraction, mask_seed)
        op = inpainting_operator(n, mask, _blur_for(blur, n, blur_sigma, shake_length, blur_seed))
    except OperatorError as e:
        raise ProblemError(f"inpainting: {e}") from e
    params = {'image': image, 'n': n, 'rank_cap': rank_cap, 'missing_fraction': missing_fraction,
              'pattern': pattern, 'noise_level': noise_level, 'seed': seed, 'blur': blur,
              'blur_sigma': blur_sigma, 'shake_length': shake_length,
              'path': None if path is None else str(path)}
    return _assemble('inpainting', op, x_exact, noise_level, seed, noise_seed, params)


GENERATORS: Dict[str, Callable[..., TestProblem]] = {
    'star': star_problem,
    'phantom': phantom_problem,
    'inpainting': inpainting_problem,
}


def generate_problem(name: str, **params: Any) -> TestProblem:
    """Строит задачу по имени генератора и его аргументам."""
    if name not in GENERATORS:
        logger.error(f"Неизвестный генератор {name}")
        raise ProblemError(f"Тип задачи должен быть из {sorted(GENERATORS)}, получено {name!r}")
    try:
        return GENERATORS[name](**params)
    except TypeError as e:
        logger.error(f"Неверные аргументы генератора {name}: {e}")
        raise ProblemError(f"{name}: {e}") from e
