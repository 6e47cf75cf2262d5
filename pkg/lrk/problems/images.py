# lrk/problems/images.py

import logging
from pathlib import Path
from typing import Callable, Dict, Union

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from lrk.problems.metrics import ProblemError

logger = logging.getLogger(__name__)


def _grid(n: int):
    u, v = np.mgrid[0:n, 0:n] / max(n - 1, 1)
    return u, v


def gaussian_profile(n: int, center: float, width: float) -> np.ndarray:
    t = np.arange(n, dtype=float)
    return np.exp(-((t - center) ** 2) / (2.0 * width ** 2))


def bump_profile(n: int, center: float, width: float) -> np.ndarray:
    """Гладкий вогнутый профиль max(0, 1 − t²)² с t = (s − center)/width на [0, 1]."""
    t = (np.linspace(0.0, 1.0, n) - center) / width
    return np.maximum(0.0, 1.0 - t ** 2) ** 2


def star_image(n: int) -> np.ndarray:
    """
    Двойная звезда: сумма двух внешних произведений гауссиан, ранг ровно 2.
    """
    first = np.outer(gaussian_profile(n, 0.35 * n, n / 20.0), gaussian_profile(n, 0.40 * n, n / 20.0))
    second = np.outer(gaussian_profile(n, 0.62 * n, n / 28.0), gaussian_profile(n, 0.66 * n, n / 28.0))
    return first + 0.7 * second


# (центр по строкам, ширина, центр по столбцам, ширина, амплитуда)
PHANTOM_BUMPS = (
    (0.30, 0.22, 0.35, 0.28, 1.0),
    (0.65, 0.25, 0.60, 0.20, 0.8),
    (0.50, 0.45, 0.50, 0.42, 0.5),
    (0.42, 0.12, 0.78, 0.15, 0.9),
)


def phantom_image(n: int) -> np.ndarray:
    """Гладкий фантом ранга 4: сумма четырёх разделимых «холмов»."""
    image = np.zeros((n, n))
    for row_c, row_w, col_c, col_w, amp in PHANTOM_BUMPS:
        image += amp * np.outer(bump_profile(n, row_c, row_w), bump_profile(n, col_c, col_w))
    return image


def house_like_image(n: int) -> np.ndarray:
    """Кусочно-гладкая синтетическая сцена с домом: небо, крыша, окна, дверь, земля."""
    u, v = _grid(n)
    image = 0.75 - 0.25 * u
    image[u > 0.85] = 0.35
    image[(u > 0.45) & (u <= 0.85) & (v > 0.2) & (v < 0.8)] = 0.55
    roof = (u > 0.2) & (u <= 0.45) & (np.abs(v - 0.5) < 0.35 * (u - 0.2) / 0.25)
    image[roof] = 0.25
    windows = (u > 0.55) & (u < 0.68) & (((v > 0.28) & (v < 0.40)) | ((v > 0.60) & (v < 0.72)))
    image[windows] = 0.9
    image[(u > 0.62) & (u <= 0.85) & (v > 0.45) & (v < 0.55)] = 0.15
    return ndimage.gaussian_filter(image, sigma=max(n / 128.0, 0.5))


# (центр по строкам, центр по столбцам, полуоси, угол, яркость)
PEPPER_BLOBS = (
    (0.30, 0.30, 0.22, 0.16, 0.5, 0.85),
    (0.62, 0.28, 0.20, 0.26, -0.3, 0.55),
    (0.45, 0.65, 0.30, 0.18, 1.0, 0.70),
    (0.78, 0.70, 0.16, 0.22, 0.2, 0.40),
    (0.20, 0.75, 0.12, 0.10, 0.0, 0.95),
)


def peppers_like_image(n: int) -> np.ndarray:
    """Перекрывающиеся затенённые эллипсы на тёмном фоне."""
    u, v = _grid(n)
    image = 0.15 + 0.05 * np.sin(6.0 * u) * np.cos(4.0 * v)
    for cu, cv, au, av, angle, level in PEPPER_BLOBS:
        du, dv = u - cu, v - cv
        ru = (np.cos(angle) * du + np.sin(angle) * dv) / au
        rv = (-np.sin(angle) * du + np.cos(angle) * dv) / av
        d2 = ru ** 2 + rv ** 2
        inside = d2 < 1.0
        shade = level * (0.6 + 0.4 * np.sqrt(np.clip(1.0 - d2, 0.0, 1.0)))
        image[inside] = shade[inside]
    return ndimage.gaussian_filter(image, sigma=max(n / 256.0, 0.5))


SYNTHETIC_SOURCES: Dict[str, Callable[[int], np.ndarray]] = {
    'house-like': house_like_image,
    'peppers-like': peppers_like_image,
}


def load_image(path: Union[str, Path], n: int) -> np.ndarray:
    """
    Загружает изображение из файла в оттенках серого и приводит к размеру n×n.

    Args:
        path (Union[str, Path]): Путь к файлу (любой формат, известный Pillow).
        n (int): Сторона результата.

    Returns:
        np.ndarray: Массив n×n со значениями в [0, 1].

    Raises:
        ProblemError: Файл не найден или не читается.
    """
    path = Path(path)
    logger.info(f"Загрузка изображения {path}")
    try:
        with Image.open(path) as img:
            gray = img.convert('F').resize((n, n), Image.Resampling.BILINEAR)
            data = np.asarray(gray, dtype=float)
    except (OSError, UnidentifiedImageError, ValueError) as e:
        logger.error(f"Не удалось прочитать изображение {path}: {e}")
        raise ProblemError(f"Не удалось прочитать изображение {path}: {e}") from e
    peak = float(data.max())
    return data / peak if peak > 0 else data


def source_image(image: str, n: int, path: Union[str, Path, None] = None) -> np.ndarray:
    """Исходное изображение для задачи восстановления: синтетическое или из файла."""
    if image == 'file':
        if path is None:
            raise ProblemError("Для image='file' нужен path")
        return load_image(path, n)
    if image not in SYNTHETIC_SOURCES:
        logger.error(f"Неизвестный источник изображения {image}")
        raise ProblemError(f"image должно быть из {sorted(SYNTHETIC_SOURCES) + ['file']}, получено {image!r}")
    return SYNTHETIC_SOURCES[image](n)
