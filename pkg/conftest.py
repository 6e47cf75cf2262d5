# conftest.py

import os
import tempfile

import numpy as np
import pytest

# логи тестов не должны попадать в каталог проекта
os.environ.setdefault('LRK_LOG_DIR', os.path.join(tempfile.gettempdir(), 'lrk-test-logs'))

from lrk.linops import dense_operator  # noqa: E402
from lrk.problems import star_problem  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: долгие тесты воспроизведения трендов (десятки секунд)')


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture(scope='session')
def star16():
    """Задача star 16×16 с гауссовым размытием и шумом 1e-3."""
    return star_problem(n=16, noise_level=1e-3, sigma_blur=1.5, seed=0)


@pytest.fixture
def dense8(rng):
    """Хорошо обусловленный плотный оператор 64×64 для изображения 8×8."""
    matrix = np.eye(64) + 0.3 * rng.standard_normal((64, 64)) / 8.0
    return dense_operator(matrix, image_side=8)


@pytest.fixture
def dense_random(rng):
    """Случайный плотный оператор 400×400 (изображение 20×20)."""
    return dense_operator(rng.standard_normal((400, 400)), image_side=20)
