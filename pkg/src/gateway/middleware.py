"""
Middleware for the CoughScreen scoring service.

- Request size limits (WAV bodies)
- Security headers on every response
"""

from __future__ import annotations

from collections.abc import Callable

from starlette.middleware.base import BaseHTTPMiddleware
from starlette.requests import Request
from starlette.responses import JSONResponse, Response

from src.constants import MAX_BODY_BYTES
from src.utils.logging import get_logger

logger = get_logger("middleware")


def error_response(status_code: int, code: str, message: str) -> JSONResponse:
    """The one error body shape the service emits."""
    return JSONResponse({"error": code, "message": message}, status_code=status_code)


class SecurityHeadersMiddleware(BaseHTTPMiddleware):
    """Add security headers to all responses."""

    async def dispatch(self, request: Request, call_next: Callable) -> Response:
        response = await call_next(request)
        response.headers["X-Content-Type-Options"] = "nosniff"
        response.headers["X-Frame-Options"] = "DENY"
        response.headers["Cache-Control"] = "no-store"
        if "server" in response.headers:
            del response.headers["server"]
        return response


class RequestSizeLimitMiddleware(BaseHTTPMiddleware):
    """Reject requests whose declared Content-Length exceeds the limit."""

    def __init__(self, app, max_size_bytes: int = MAX_BODY_BYTES):
        super().__init__(app)
        self.max_size_bytes = max_size_bytes

    async def dispatch(self, request: Request, call_next: Callable) -> Response:
        content_length = request.headers.get("content-length")
        if content_length:
            try:
                declared = int(content_length)
            except ValueError:
                return error_response(400, "BadRequest", "Content-Length is not an integer.")
            if declared > self.max_size_bytes:
                logger.warning("request_too_large", declared=declared, limit=self.max_size_bytes)
                return error_response(
                    413, "RequestTooLarge", f"Body of {declared} bytes exceeds the {self.max_size_bytes}-byte limit."
                )
        return await call_next(request)
