"""Logging configuration for bigcm."""

import json
import logging
from datetime import datetime, timezone

from config import config

# extra= keys copied into the JSON record when present
_EXTRA_FIELDS = (
    "field",
    "D",
    "m_max",
    "precision",
    "trace_bound",
    "n_terms",
    "elapsed",
    "cache_key",
    "points",
    "radius",
)


class JSONFormatter(logging.Formatter):
    """JSON formatter for structured logging."""

    def format(self, record):
        log_entry = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }

        for name in _EXTRA_FIELDS:
            if hasattr(record, name):
                log_entry[name] = getattr(record, name)

        if record.exc_info:
            log_entry["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_entry, default=str)


def setup_logging():
    """Setup library logging."""
    logger = logging.getLogger("bigcm")
    logger.setLevel(getattr(logging, config.log_level.upper(), logging.INFO))

    for handler in logger.handlers[:]:
        logger.removeHandler(handler)

    # stderr keeps stdout clean for CLI reports
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(JSONFormatter())
    logger.addHandler(console_handler)

    if config.log_to_file:
        file_handler = logging.FileHandler("bigcm.log")
        file_handler.setFormatter(JSONFormatter())
        logger.addHandler(file_handler)

    return logger


# Global logger instance
logger = setup_logging()
