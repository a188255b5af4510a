# encoding=utf-8

import logging
import threading
from typing import Optional, Union

PACKAGE_LOGGER = "cavitysta"


class Log:
    """
    One-time logging bootstrap for the cavitysta package logger.

    Library modules log through ``logging.getLogger(__name__)``; only entry points call ``Log.init``.
    """
    instance = None
    _lock = threading.Lock()

    @classmethod
    def init(cls, level: Union[int, str] = logging.INFO, log_file_path: Optional[str] = None):
        with cls._lock:
            cls.instance = cls()
            cls.instance.logger = cls._create_logger(level, log_file_path)
        return cls.instance.logger

    @staticmethod
    def _create_logger(level, log_file_path):
        if isinstance(level, str):
            level = getattr(logging, level.upper())

        logger = logging.getLogger(PACKAGE_LOGGER)
        logger.setLevel(level)

        if logger.hasHandlers():
            logger.handlers.clear()

        formatter = logging.Formatter(
            '%(asctime)s.%(msecs)03d - %(levelname)s - %(name)s - %(message)s',
            datefmt='%d-%b-%y %H:%M:%S'
        )

        console_handler = logging.StreamHandler()
        console_handler.setLevel(level)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

        if log_file_path:
            file_handler = logging.FileHandler(log_file_path)
            file_handler.setLevel(level)
            file_handler.setFormatter(formatter)
            logger.addHandler(file_handler)

        logger.propagate = False
        return logger
