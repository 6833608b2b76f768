"""
Logging configuration for radfix.
Logs go to stdout (and optionally a file), never into the result files.
"""

import logging
import os
import sys
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(log_level: str = "INFO", log_file: Optional[str] = None):
    """Setup logging for the application."""

    logging.basicConfig(
        format=LOG_FORMAT,
        stream=sys.stdout,
        level=getattr(logging, log_level.upper()),
        force=True,
    )

    if log_file:
        log_path = Path(log_file)
        log_path.parent.mkdir(parents=True, exist_ok=True)

        file_handler = logging.FileHandler(log_path)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logging.getLogger().addHandler(file_handler)


def get_logger(name: str):
    """Get a logger instance."""
    return logging.getLogger(name)


def default_log_level() -> str:
    """LOG_LEVEL from the environment or a .env file."""
    load_dotenv()
    return os.getenv("LOG_LEVEL", "INFO")
