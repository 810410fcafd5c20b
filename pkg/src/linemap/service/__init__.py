"""HTTP service exposing the mapping toolkit."""

from linemap.service.app import app, create_app

__all__ = ["app", "create_app"]
