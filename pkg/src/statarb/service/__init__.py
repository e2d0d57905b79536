"""HTTP service wrapping the core engine (FastAPI + pydantic schemas)."""

from .app import app, create_app

__all__ = ["app", "create_app"]
