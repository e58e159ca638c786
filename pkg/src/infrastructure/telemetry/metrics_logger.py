from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List

from filelock import FileLock

try:  # Optional dependency
    import requests  # type: ignore
except ModuleNotFoundError:  # pragma: no cover - fallback when requests is unavailable
    requests = None

from config.settings import Settings


def _to_jsonable(value: Any) -> Any:
    if hasattr(value, "item") and callable(value.item):
        return value.item()
    if hasattr(value, "tolist"):
        return value.tolist()
    return str(value)


@dataclass
class MetricsLogger:
    """JSONL training log, bucket histograms and alerts under one logs directory."""

    logs_dir: Path = field(default_factory=lambda: Path("logs"))
    metrics_webhook_urls: List[str] = field(default_factory=list)
    alert_webhook_urls: List[str] = field(default_factory=list)

    @classmethod
    def from_settings(cls, settings: Settings) -> "MetricsLogger":
        return cls(
            logs_dir=Path(settings.logs_dir),
            metrics_webhook_urls=Settings.split_urls(settings.metrics_webhook_url),
            alert_webhook_urls=Settings.split_urls(settings.alert_webhook_url),
        )

    @property
    def metrics_path(self) -> Path:
        return self.logs_dir / "metrics.log"

    @property
    def alerts_path(self) -> Path:
        return self.logs_dir / "alerts.log"

    @property
    def histogram_path(self) -> Path:
        return self.logs_dir / "metrics_histograms.json"

    def record_metric(self, event: str, payload: Dict[str, Any]) -> None:
        entry = self._entry(event, payload)
        self._append(self.metrics_path, entry)
        _post_webhooks(self.metrics_webhook_urls, entry)

    def notify_alert(self, event: str, payload: Dict[str, Any]) -> None:
        entry = self._entry(event, payload)
        _post_webhooks(self.alert_webhook_urls, entry)
        self._append(self.alerts_path, entry)

    def load_entries(self, limit: int | None = None) -> list[Dict[str, Any]]:
        if not self.metrics_path.exists():
            return []
        lines = self.metrics_path.read_text(encoding="utf-8").splitlines()
        if limit:
            lines = lines[-limit:]
        entries: list[Dict[str, Any]] = []
        for line in lines:
            if not line.strip():
                continue
            try:
                entries.append(json.loads(line))
            except json.JSONDecodeError:
                continue
        return entries

    def record_histogram(
        self,
        name: str,
        value: float,
        bucket_size: float = 1.0,
        tags: Dict[str, object] | None = None,
    ) -> None:
        tags = tags or {}
        tag_key = ",".join(f"{key}={tags[key]}" for key in sorted(tags))
        bucket = int(value // bucket_size * bucket_size)
        event_key = f"{name}|bucket_size={bucket_size}|{tag_key or 'default'}"
        self.logs_dir.mkdir(parents=True, exist_ok=True)
        with FileLock(str(self.histogram_path) + ".lock"):
            histogram = self.load_histograms()
            buckets = histogram.get(event_key, {})
            buckets[str(bucket)] = buckets.get(str(bucket), 0) + 1
            histogram[event_key] = buckets
            self.histogram_path.write_text(json.dumps(histogram, ensure_ascii=False, indent=2), encoding="utf-8")

    def load_histograms(self) -> Dict[str, Dict[str, int]]:
        if not self.histogram_path.exists():
            return {}
        try:
            return json.loads(self.histogram_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            return {}

    @staticmethod
    def _entry(event: str, payload: Dict[str, Any]) -> Dict[str, Any]:
        return {"timestamp": datetime.now(timezone.utc).isoformat(), "event": event, "payload": payload}

    def _append(self, path: Path, entry: Dict[str, Any]) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with FileLock(str(path) + ".lock"):
            with path.open("a", encoding="utf-8") as cursor:
                cursor.write(json.dumps(entry, ensure_ascii=False, default=_to_jsonable) + "\n")


def _post_webhooks(urls: Iterable[str], payload: Dict[str, Any]) -> None:
    if not urls or not requests:
        return
    for url in urls:
        try:
            requests.post(url, json=json.loads(json.dumps(payload, default=_to_jsonable)), timeout=5)
        except Exception:
            continue


__all__ = ["MetricsLogger"]
