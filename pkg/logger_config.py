import os
import sys

from loguru import logger

LOG_FORMAT = "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | <cyan>{extra[name]}</cyan> - <level>{message}</level>"

_handler_id = None


def configure_logging(level: str = None):
    """
    Replaces the stderr sink with one at the requested level.

    Args:
        level (str, optional): A loguru level name. Defaults to the LOG_LEVEL
            environment variable, or INFO when unset.
    """
    global _handler_id
    level = (level or os.getenv("LOG_LEVEL") or "INFO").upper()
    if _handler_id is not None:
        logger.remove(_handler_id)
    _handler_id = logger.add(sys.stderr, format=LOG_FORMAT, level=level, colorize=True)


# Remove the default handler
logger.remove()
logger.configure(extra={"name": "tebd"})
configure_logging()


def get_logger(name):
    """
    Returns a logger instance with the specified name.

    Args:
        name (str): The name to bind to the logger.

    Returns:
        loguru.Logger: A logger instance with the given name.
    """
    return logger.bind(name=name)
