from __future__ import annotations

from pathlib import Path
from typing import List

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime settings loaded from environment variables (and ``.env``)."""

    app_env: str = Field(default="development", alias="GROD_ENV")
    log_level: str = Field(default="INFO", alias="GROD_LOG_LEVEL")

    # Directories
    output_dir: Path = Field(default=Path("output"), alias="GROD_OUTPUT_DIR")
    data_dir: Path = Field(default=Path("data"), alias="GROD_DATA_DIR")
    logs_dir: Path = Field(default=Path("logs"), alias="GROD_LOGS_DIR")

    # Telemetry
    metrics_webhook_url: str = Field(default="", alias="GROD_METRICS_WEBHOOK_URL")
    alert_webhook_url: str = Field(default="", alias="GROD_ALERT_WEBHOOK_URL")

    model_config = SettingsConfigDict(env_file=".env", env_file_encoding="utf-8", extra="ignore")

    @property
    def metrics_log_path(self) -> Path:
        return self.logs_dir / "metrics.log"

    @property
    def alerts_log_path(self) -> Path:
        return self.logs_dir / "alerts.log"

    @property
    def histogram_path(self) -> Path:
        return self.logs_dir / "metrics_histograms.json"

    @staticmethod
    def split_urls(raw: str) -> List[str]:
        return [url.strip() for url in raw.split(",") if url.strip()]

    def ensure_runtime_directories(self) -> None:
        """
        Guarantee that the output, data and logs directories exist.
        This method is idempotent and safe to call multiple times.
        """
        for directory in [self.output_dir, self.data_dir, self.logs_dir]:
            Path(directory).mkdir(parents=True, exist_ok=True)
