"""Logging configuration for the simulator"""

import sys
from pathlib import Path
from typing import Optional

from loguru import logger


DEFAULT_LOG_CONFIG = {
    'level': 'INFO',
    'log_to_file': False,
    'log_file': 'logs/mmwave_sim.log',
    'max_log_size_mb': 100,
    'backup_count': 5,
}


def setup_logger(log_config: Optional[dict] = None, debug: bool = False) -> None:
    """
    Configure the logger.

    Args:
        log_config: Mapping with the keys of the ``logging`` config section
            (missing keys fall back to DEFAULT_LOG_CONFIG)
        debug: Force DEBUG level regardless of the configured level
    """
    settings = dict(DEFAULT_LOG_CONFIG)
    if log_config:
        settings.update(log_config)
    level = 'DEBUG' if debug else settings['level']

    # Remove default handler
    logger.remove()

    logger.add(
        sys.stderr,
        format="<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan>:<cyan>{function}</cyan> - <level>{message}</level>",
        level=level,
        colorize=True
    )

    if settings['log_to_file']:
        log_file = settings['log_file']
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)

        logger.add(
            log_file,
            format="{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function} - {message}",
            level=level,
            rotation=f"{settings['max_log_size_mb']} MB",
            retention=settings['backup_count'],
            compression="zip"
        )

    logger.debug("Logger initialized")


def get_logger():
    """Get the configured logger instance"""
    return logger
