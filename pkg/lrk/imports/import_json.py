# lrk/imports/import_json.py

import json
import os
from pathlib import Path
from typing import Any, Dict, Union

from lrk.logging_config import logger


class JsonImportError(ValueError):
    """Исключение, возникающее при чтении JSON-файлов конфигурации и метаданных."""
    pass


def import_json_file(file_path: Union[str, Path]) -> Dict[str, Any]:
    """
    Загружает JSON-документ верхнего уровня (объект) из файла.

    Args:
        file_path (Union[str, Path]): Путь к JSON-файлу.

    Returns:
        Dict[str, Any]: Содержимое файла.

    Raises:
        JsonImportError: Если файл не существует, не разбирается или содержит не объект.
    """
    logger.info(f"Чтение JSON из файла: {file_path}")

    if not os.path.exists(file_path):
        logger.error(f"Файл {file_path} не найден")
        raise JsonImportError(f"Файл {file_path} не найден")

    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        logger.error(f"Ошибка парсинга JSON в файле {file_path}: {e}")
        raise JsonImportError(f"Ошибка парсинга JSON в файле {file_path}: {e}") from e
    except OSError as e:
        logger.exception(f"Ошибка при чтении файла {file_path}: {e}")
        raise JsonImportError(f"Ошибка при чтении файла {file_path}: {e}") from e

    if not isinstance(data, dict):
        logger.error(f"В файле {file_path} ожидался объект JSON, получено {type(data).__name__}")
        raise JsonImportError(f"В файле {file_path} ожидался объект JSON")
    logger.debug(f"Ключи верхнего уровня: {list(data)}")
    return data
