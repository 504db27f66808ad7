"""HTTP service wrapper around the consistency checker."""

from .app import create_app

__all__ = ["create_app"]
