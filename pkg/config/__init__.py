"""Global configuration helpers for grodlab."""

from functools import lru_cache

from .experiment import ExperimentConfig, load_experiment_config
from .settings import Settings


@lru_cache
def get_settings() -> Settings:
    """Return cached settings instance (loads from environment/.env)."""
    return Settings()


def reload_settings() -> None:
    """Clear cache so next call reloads the environment."""
    cache_clear = getattr(get_settings, "cache_clear", None)
    if callable(cache_clear):
        cache_clear()


__all__ = ["Settings", "ExperimentConfig", "get_settings", "reload_settings", "load_experiment_config"]
