from __future__ import annotations

import io
import json
import logging
import sys

from application.logging_config import JsonLogFormatter, StderrHandler, configure_logging


def _record(**extra) -> logging.LogRecord:
    record = logging.LogRecord("grodlab.test", logging.INFO, __file__, 1, "epoch %s done", (3,), None)
    for key, value in extra.items():
        setattr(record, key, value)
    return record


def test_formatter_emits_json_with_extra_fields():
    payload = json.loads(JsonLogFormatter().format(_record(epoch=3, l1=0.25)))
    assert payload["message"] == "epoch 3 done"
    assert payload["level"] == "INFO"
    assert payload["logger"] == "grodlab.test"
    assert payload["epoch"] == 3 and payload["l1"] == 0.25


def test_formatter_skips_values_that_are_not_json():
    payload = json.loads(JsonLogFormatter().format(_record(matrix=object(), ok="yes")))
    assert "matrix" not in payload
    assert payload["ok"] == "yes"


def test_stderr_handler_follows_the_current_stderr(monkeypatch):
    handler = StderrHandler()
    handler.setFormatter(JsonLogFormatter())
    buffer = io.StringIO()
    monkeypatch.setattr(sys, "stderr", buffer)
    handler.emit(_record())
    assert json.loads(buffer.getvalue())["message"] == "epoch 3 done"


def test_configure_logging_installs_a_single_handler():
    logger = configure_logging("DEBUG")
    count = len(logger.handlers)
    assert configure_logging("INFO") is logger
    assert len(logger.handlers) == count
    assert logger.level == logging.INFO
    assert logger.propagate is False
