from __future__ import annotations
import logging, os, sys
import structlog

_configured = False


def _level() -> int:
    name = os.getenv("ROTOPAT_LOG_LEVEL", "INFO").upper()
    return getattr(logging, name, logging.INFO)


def get_logger(name: str = "rotopat"):
    global _configured
    if not _configured:
        logging.basicConfig(level=_level(), stream=sys.stdout)
        structlog.configure(
            wrapper_class=structlog.make_filtering_bound_logger(_level()),
            processors=[
                structlog.processors.TimeStamper(fmt="iso"),
                structlog.processors.add_log_level,
                structlog.processors.JSONRenderer(),
            ],
        )
        _configured = True
    return structlog.get_logger(name)
