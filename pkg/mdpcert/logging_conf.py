"""
Logging configuration for structured logging across the toolkit.
"""
import logging
import sys
from typing import Optional
from mdpcert.config import settings


def setup_logging(level: Optional[str] = None):
    """Configure structured logging for the toolkit."""

    # Create formatter with structured output
    formatter = logging.Formatter(
        fmt='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    # Console handler
    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setFormatter(formatter)

    # Root logger configuration
    root_logger = logging.getLogger()
    root_logger.setLevel(getattr(logging, (level or settings.log_level).upper()))
    for handler in list(root_logger.handlers):
        if getattr(handler, "_mdpcert", False):
            root_logger.removeHandler(handler)
    console_handler._mdpcert = True
    root_logger.addHandler(console_handler)

    if settings.log_file:
        file_handler = logging.FileHandler(settings.log_file)
        file_handler.setFormatter(formatter)
        file_handler._mdpcert = True
        root_logger.addHandler(file_handler)

    # Silence noisy libraries
    logging.getLogger("numexpr").setLevel(logging.WARNING)
    logging.getLogger("langgraph").setLevel(logging.WARNING)

    return root_logger
