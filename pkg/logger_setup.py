import logging
import os
import sys

import colorama
import structlog

# scipy logs every HiGHS call at DEBUG
QUIET_LOGGERS = ("scipy",)


def compact_matrices(_, __, event_dict: dict) -> dict:
    """Degree matrices and size vectors are logged in their one-line text form."""
    for key, value in event_dict.items():
        if hasattr(value, "text") and hasattr(value, "shape"):
            event_dict[key] = value.text()
        elif isinstance(value, tuple) and len(value) > 12:
            event_dict[key] = f"{list(value[:12])}... ({len(value)} entries)"
    return event_dict


def _renderer(fmt: str, stream):
    if fmt == "json":
        return structlog.processors.JSONRenderer(sort_keys=True)
    colors = stream.isatty() and not os.getenv("NO_COLOR")
    if colors:
        # ANSI escapes on legacy Windows consoles
        colorama.just_fix_windows_console()
    return structlog.dev.ConsoleRenderer(colors=colors)


def setup_logger(stream=None):
    """
    Route structlog through stdlib logging on stderr; stdout carries query
    answers only. C2SPECTRA_LOG_FORMAT picks console or json lines (json
    by default when ENV=production), LOG_LEVEL the starting level.
    """
    stream = stream or sys.stderr
    production = os.getenv("ENV", "development").lower() == "production"
    fmt = os.getenv("C2SPECTRA_LOG_FORMAT", "json" if production else "console").lower()
    level = getattr(logging, os.getenv("LOG_LEVEL", "INFO").upper(), logging.INFO)

    handler = logging.StreamHandler(stream)
    handler.setFormatter(logging.Formatter("%(message)s"))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(level)
    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)

    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_log_level,
            compact_matrices,
            structlog.processors.TimeStamper(fmt="%H:%M:%S", utc=False),
            structlog.processors.format_exc_info,
            _renderer(fmt, stream),
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )


def set_level(level: str):
    """The CLI's -v / --debug."""
    logging.getLogger().setLevel(getattr(logging, level.upper(), logging.INFO))


setup_logger()
