"""Telemetry helpers."""

from .metrics_logger import MetricsLogger  # noqa: F401
