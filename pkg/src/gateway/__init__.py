"""CoughScreen scoring service: FastAPI app, routes and middleware."""

from src.gateway.app import create_app

__all__ = ["create_app"]
