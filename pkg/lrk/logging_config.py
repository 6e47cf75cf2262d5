# lrk/logging_config.py

import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path

from lrk.config import Config_Run

# Создание директории для логов, если она не существует
log_directory: Path = Path(Config_Run.LOG_DIR)
log_directory.mkdir(parents=True, exist_ok=True)

handler = RotatingFileHandler(
    log_directory / 'lrk.log',
    maxBytes=10 * 1024 * 1024,  # 10 MB
    backupCount=5,
    encoding='utf-8'
)

logging.basicConfig(
    handlers=[handler],
    level=getattr(logging, Config_Run.LOG_LEVEL, logging.INFO),
    format='%(asctime)s - %(levelname)s - %(message)s',
    datefmt='%d.%m.%Y %H:%M:%S',
)

logger = logging.getLogger('lrk')
