"""
Модуль логирования для FD Wiretap
"""
import logging
import os
import sys
import threading
from pathlib import Path
from logging.handlers import RotatingFileHandler

LOG_DIR = Path(os.environ.get("FDW_LOG_DIR", Path.home() / ".fd_wiretap" / "logs"))
LOG_FILE = LOG_DIR / "fd_wiretap.log"

# Блокировка для потокобезопасной ротации логов
_log_rotation_lock = threading.Lock()


class ThreadSafeRotatingFileHandler(RotatingFileHandler):
    """RotatingFileHandler, безопасный при параллельных прогонах Монте-Карло"""

    def doRollover(self):
        """Ротация под блокировкой"""
        with _log_rotation_lock:
            try:
                super().doRollover()
            except (PermissionError, OSError):
                # Файл занят - продолжаем писать в текущий
                pass


def setup_logger(name="FdWiretap"):
    """Настроить логгер для модуля"""
    logger = logging.getLogger(name)

    if logger.handlers:
        # Логгер уже настроен
        return logger

    logger.setLevel(logging.INFO)

    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    try:
        LOG_DIR.mkdir(parents=True, exist_ok=True)
        # Ротация: макс. 5MB, 5 файлов
        file_handler = ThreadSafeRotatingFileHandler(
            LOG_FILE,
            maxBytes=5*1024*1024,
            backupCount=5,
            encoding='utf-8'
        )
        file_handler.setLevel(logging.INFO)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)
    except OSError:
        # Каталог логов недоступен (только чтение) - пишем лишь в консоль
        logger.addHandler(logging.NullHandler())

    # В консоль только предупреждения и ошибки, и только в интерактивном режиме
    if sys.stdout and sys.stdout.isatty():
        console_handler = logging.StreamHandler(sys.stdout)
        console_handler.setLevel(logging.WARNING)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

    return logger


def get_log_file_path():
    """Получить путь к файлу логов"""
    return str(LOG_FILE)
