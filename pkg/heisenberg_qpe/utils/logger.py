"""包级日志器

统一使用 `from ..utils.logger import logger`，输出到 stderr，保持 stdout 只输出 JSON/CSV。
"""

import logging
import os

import colorlog

LOG_FORMAT = "%(log_color)s[%(asctime)s] [%(levelname)s] [%(module)s] %(message)s"
ENV_LEVEL = "HEISENBERG_QPE_LOG_LEVEL"


def _build_logger() -> logging.Logger:
    log = logging.getLogger("heisenberg_qpe")
    if not log.handlers:
        handler = colorlog.StreamHandler()
        handler.setFormatter(
            colorlog.ColoredFormatter(
                LOG_FORMAT,
                datefmt="%H:%M:%S",
                log_colors={
                    "DEBUG": "green",
                    "INFO": "cyan",
                    "WARNING": "yellow",
                    "ERROR": "red",
                    "CRITICAL": "bold_red",
                },
            )
        )
        log.addHandler(handler)
        log.propagate = False
    log.setLevel(os.environ.get(ENV_LEVEL, "INFO").upper())
    return log


def set_level(level: str) -> None:
    """调整日志级别，例如 "DEBUG"、"WARNING" """
    logger.setLevel(level.upper())


logger = _build_logger()
