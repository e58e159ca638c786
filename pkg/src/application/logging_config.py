from __future__ import annotations

import json
import logging
import sys
from typing import IO, Any, Dict, Optional

_configured = False

_RESERVED = set(vars(logging.LogRecord("", 0, "", 0, "", (), None))) | {"message", "asctime"}


class JsonLogFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:  # noqa: D401
        payload: Dict[str, Any] = {
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "timestamp": self.formatTime(record, datefmt="%Y-%m-%dT%H:%M:%S%z"),
        }
        for key, value in record.__dict__.items():
            if key in _RESERVED or key.startswith("_"):
                continue
            try:
                json.dumps(value)
            except (TypeError, ValueError):
                continue
            payload[key] = value
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        return json.dumps(payload, ensure_ascii=False)


class StderrHandler(logging.StreamHandler):
    """Stream handler bound to whatever ``sys.stderr`` is when a record is emitted."""

    @property  # type: ignore[override]
    def stream(self) -> IO[str]:
        return sys.stderr

    @stream.setter
    def stream(self, value: IO[str]) -> None:
        pass


def configure_logging(level: Optional[str] = None, stream: Optional[IO[str]] = None) -> logging.Logger:
    """Install the JSON handler once; later calls only adjust the level.

    Records go to stderr unless ``stream`` is given; stdout stays reserved for command results.
    """
    global _configured
    logger = logging.getLogger("grodlab")
    if level:
        logger.setLevel(level)

    if not _configured:
        if not level:
            logger.setLevel("INFO")
        handler = logging.StreamHandler(stream) if stream is not None else StderrHandler()
        handler.setFormatter(JsonLogFormatter())
        logger.addHandler(handler)
        logger.propagate = False
        _configured = True
    return logger


__all__ = ["JsonLogFormatter", "StderrHandler", "configure_logging"]
