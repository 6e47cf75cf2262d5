# lrk/config.py

import os
from typing import ClassVar

from dotenv import load_dotenv

load_dotenv()


class ConfigurationError(ValueError):
    """Исключение, возникающее при ошибках конфигурации."""
    pass


def _read_threads(raw: str) -> int:
    try:
        threads = int(raw)
    except ValueError as e:
        raise ConfigurationError(f"LRK_THREADS должно быть целым числом, получено {raw!r}") from e
    if threads < 1:
        raise ConfigurationError(f"LRK_THREADS должно быть >= 1, получено {threads}")
    return threads


class Config_Run:
    """Параметры окружения для запуска экспериментов."""

    LOG_DIR: ClassVar[str] = os.getenv('LRK_LOG_DIR', 'logs')
    LOG_LEVEL: ClassVar[str] = os.getenv('LRK_LOG_LEVEL', 'INFO').upper()

    @staticmethod
    def threads() -> int:
        """
        Максимальное число одновременно выполняемых решателей.

        Читается при каждом вызове, чтобы переменную можно было задать после импорта.

        Returns:
            int: Значение LRK_THREADS (по умолчанию 1).

        Raises:
            ConfigurationError: Если значение не является положительным целым.
        """
        return _read_threads(os.getenv('LRK_THREADS', '1'))
