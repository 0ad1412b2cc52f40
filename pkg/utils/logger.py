import logging
import sys
from logging.handlers import RotatingFileHandler

import structlog

from config.settings import settings

# Configure structlog
structlog.configure(
    processors=[
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.stdlib.PositionalArgumentsFormatter(),
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        structlog.processors.UnicodeDecoder(),
        structlog.processors.JSONRenderer(ensure_ascii=False)
        if settings.enable_json_logging
        else structlog.processors.KeyValueRenderer(
            key_order=["timestamp", "level", "logger", "event"], drop_missing=True
        ),
    ],
    context_class=dict,
    logger_factory=structlog.stdlib.LoggerFactory(),
    wrapper_class=structlog.stdlib.BoundLogger,
    cache_logger_on_first_use=True,
)

ROOT_LOGGER = "morphsuite"


def setup_logger(name=ROOT_LOGGER, log_file=None, level=None):
    """Attach stderr (and optionally rotating file) handlers to the toolkit logger."""
    logger = logging.getLogger(name)

    if not logger.handlers:
        logger.setLevel(getattr(logging, (level or settings.log_level).upper()))
        logger.propagate = False

        # structlog renders the whole line; handlers only ship it
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(logging.Formatter("%(message)s"))
        logger.addHandler(console_handler)

        log_file = log_file or settings.log_file
        if log_file:
            settings.ensure_directories()
            file_handler = RotatingFileHandler(
                settings.logs_dir / log_file,
                maxBytes=settings.log_max_bytes,
                backupCount=settings.log_backup_count,
                encoding="utf-8",
            )
            file_handler.setFormatter(logging.Formatter("%(message)s"))
            logger.addHandler(file_handler)

    return logger


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    """Get a structured logger below the toolkit's root logger."""
    return structlog.get_logger(f"{ROOT_LOGGER}.{name}")


class LoggerMixin:
    """Mixin providing a structured logger named after the class."""

    @property
    def logger(self) -> structlog.stdlib.BoundLogger:
        if not hasattr(self, "_logger"):
            self._logger = get_logger(self.__class__.__name__.lower())
        return self._logger

    def log_command(self, command_name: str, **kwargs):
        """Log command execution with its resolved options."""
        self.logger.info("Command executed", command=command_name, **kwargs)

    def log_performance(self, operation: str, duration: float, **kwargs):
        """Log performance metrics."""
        self.logger.info(
            "Performance metric",
            operation=operation,
            duration=round(duration, 4),
            **kwargs,
        )
