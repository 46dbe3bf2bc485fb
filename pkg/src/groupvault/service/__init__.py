"""FastAPI service exposing the proxy plus public ledger/store reads."""

from .app import build_app, create_app

__all__ = ["build_app", "create_app"]
