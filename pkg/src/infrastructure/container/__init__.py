"""Container utilities for grodlab."""

from .service_container import ServiceContainer, get_container

__all__ = ["ServiceContainer", "get_container"]
