from __future__ import annotations

from typing import Any, Dict, Optional, Protocol


class TelemetrySink(Protocol):
    """Training log and alerting (JSONL metrics, bucket histograms)."""

    def record_metric(self, event: str, payload: Dict[str, Any]) -> None: ...

    def record_histogram(
        self,
        name: str,
        value: float,
        bucket_size: float = 1.0,
        tags: Optional[Dict[str, object]] = None,
    ) -> None: ...

    def notify_alert(self, event: str, payload: Dict[str, Any]) -> None: ...

