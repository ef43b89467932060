"""
日志配置模块

控制台输出 + 可选的滚动文件输出
"""
import sys
from pathlib import Path
from typing import Optional

from loguru import logger

from config import config

CONSOLE_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{extra[engine]}</cyan> | "
    "{message}"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {extra[engine]} | {name}:{line} | {message}"


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> None:
    """
    设置日志配置

    Args:
        level: 日志级别，默认读取配置
        log_file: 日志文件路径，为空时只输出到控制台
    """
    level = (level or config.log_level).upper()
    log_file = log_file or config.log_file

    logger.remove()
    logger.configure(extra={"engine": "-"})
    logger.add(sys.stderr, level=level, format=CONSOLE_FORMAT, colorize=True)

    if log_file:
        path = Path(log_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        # 文件日志: 50MB滚动，保留5个
        logger.add(
            str(path),
            level=level,
            format=FILE_FORMAT,
            rotation="50 MB",
            retention=5,
            encoding="utf-8",
            enqueue=True,
        )

    logger.debug(f"日志初始化完成: level={level}, file={log_file}")
