# lrk/problems/export.py

import json
import logging
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from lrk.imports.import_json import JsonImportError, import_json_file
from lrk.linops.vectorize import unvec_square
from lrk.problems.generators import TestProblem, generate_problem
from lrk.problems.metrics import ProblemError

logger = logging.getLogger(__name__)

PGM_MAX = 65535


def save_pgm(x: np.ndarray, path: Union[str, Path]) -> Path:
    """
    Сохраняет изображение (вектор длины n² или матрицу n×n) как 16-битный PGM.

    Значения линейно переводятся из [min, max] в [0, 65535].
    """
    path = Path(path)
    image = np.asarray(x, dtype=float)
    if image.ndim == 1:
        image = unvec_square(image)
    low, high = float(image.min()), float(image.max())
    scaled = np.zeros_like(image) if high == low else (image - low) / (high - low)
    levels = np.rint(scaled * PGM_MAX).astype(np.int32)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(levels, mode='I').save(path, format='PPM')
    logger.debug(f"Изображение {image.shape} записано в {path}")
    return path


def load_pgm(path: Union[str, Path]) -> np.ndarray:
    """Читает PGM в матрицу со значениями в [0, 1]."""
    path = Path(path)
    try:
        with Image.open(path) as img:
            data = np.asarray(img, dtype=float)
    except OSError as e:
        logger.error(f"Не удалось прочитать {path}: {e}")
        raise ProblemError(f"Не удалось прочитать {path}: {e}") from e
    return data / PGM_MAX


def export_problem(problem: TestProblem, directory: Union[str, Path]) -> Path:
    """
    Выгружает задачу в каталог: x_exact.pgm, b.npy и problem.json.

    Returns:
        Path: Каталог задачи.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_pgm(problem.x_exact, directory / 'x_exact.pgm')
    np.save(directory / 'b.npy', problem.b)
    meta = {
        'generator': problem.name,
        'params': problem.params,
        'seed': problem.seed,
        'noise_level': problem.noise_level,
        'shape': list(problem.op.shape),
        'operator': getattr(problem.op, 'params', {}),
    }
    with open(directory / 'problem.json', 'w', encoding='utf-8') as f:
        json.dump(meta, f, ensure_ascii=False, indent=2)
    logger.info(f"Задача {problem.name} выгружена в {directory}")
    return directory


def import_problem(directory: Union[str, Path], atol: float = 1e-12) -> TestProblem:
    """
    Восстанавливает задачу по problem.json и сверяет данные с b.npy.

    Raises:
        ProblemError: Нет файлов или данные не совпадают с пересозданной задачей.
    """
    directory = Path(directory)
    try:
        meta = import_json_file(directory / 'problem.json')
    except JsonImportError as e:
        raise ProblemError(str(e)) from e
    if 'generator' not in meta or 'params' not in meta:
        logger.error(f"В {directory / 'problem.json'} нет generator/params")
        raise ProblemError("problem.json должен содержать generator и params")
    problem = generate_problem(meta['generator'], **meta['params'])
    stored_path = directory / 'b.npy'
    if not stored_path.exists():
        logger.error(f"Нет файла {stored_path}")
        raise ProblemError(f"Нет файла {stored_path}")
    stored = np.load(stored_path)
    if stored.shape != problem.b.shape or not np.allclose(stored, problem.b, rtol=0.0, atol=atol):
        logger.error(f"Данные {stored_path} не совпадают с пересозданной задачей")
        raise ProblemError(f"Данные {stored_path} не совпадают с задачей {meta['generator']}")
    logger.info(f"Задача {problem.name} загружена из {directory}")
    return problem
