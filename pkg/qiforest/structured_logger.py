"""
Structured JSON Logger with run correlation IDs for QIForest

Every CLI invocation gets a run id; each log record carries it so the log
lines of one benchmark run can be grouped after the fact.

Usage in the CLI:
    from qiforest.structured_logger import setup_structured_logging, run_context
    setup_structured_logging(enable_json=True, level='INFO')
    with run_context():
        ...

Usage in library modules:
    from qiforest.structured_logger import get_logger
    logger = get_logger(__name__)
    logger.info('Repeat finished', extra={
        'dataset': 'housing',
        'repeat': 3,
        'treatment_mse': 0.21,
    })
"""

import contextlib
import contextvars
import json
import logging
import sys
import uuid
from datetime import datetime, timezone

ROOT_LOGGER = "qiforest"

_run_id = contextvars.ContextVar("qiforest_run_id", default=None)


class JSONFormatter(logging.Formatter):
    """
    Formats log records as JSON with run correlation IDs and structured data.
    """

    def format(self, record):
        log_data = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        run_id = current_run_id()
        if run_id:
            log_data["run_id"] = run_id

        if hasattr(record, "extra_data"):
            log_data.update(record.extra_data)

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_data, default=str)


class TextFormatter(logging.Formatter):
    """Plain text format for development, with structured fields appended."""

    def __init__(self):
        super().__init__("%(asctime)s [%(levelname)s] %(name)s: %(message)s")

    def format(self, record):
        line = super().format(record)
        extra = getattr(record, "extra_data", None)
        if extra:
            line += " " + " ".join(f"{key}={value}" for key, value in extra.items())
        return line


class StructuredLoggerAdapter(logging.LoggerAdapter):
    """
    Adapter that adds extra data to log records.
    """

    def process(self, msg, kwargs):
        extra = kwargs.get("extra", {})
        kwargs["extra"] = {"extra_data": extra}
        return msg, kwargs


def get_logger(name):
    """Structured logger for a qiforest module."""
    return StructuredLoggerAdapter(logging.getLogger(name), {})


def current_run_id():
    return _run_id.get()


@contextlib.contextmanager
def run_context(run_id=None):
    """Bind a correlation id to every record logged inside the block."""
    token = _run_id.set(run_id or str(uuid.uuid4()))
    try:
        yield _run_id.get()
    finally:
        _run_id.reset(token)


def setup_structured_logging(enable_json=True, level="INFO", stream=None):
    """
    Configure logging for the qiforest package.

    Args:
        enable_json: If True, use JSON formatter. If False, use standard text logging.
        level: Log level name; unknown names fall back to INFO
        stream: Output stream, stderr by default so stdout stays the report

    Returns:
        The configured package logger
    """
    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(JSONFormatter() if enable_json else TextFormatter())

    logger = logging.getLogger(ROOT_LOGGER)
    logger.handlers.clear()
    logger.addHandler(handler)
    logger.setLevel(getattr(logging, str(level).upper(), logging.INFO))
    logger.propagate = False

    logger.debug("structured logging initialised", extra={"extra_data": {"json": enable_json}})
    return logger
