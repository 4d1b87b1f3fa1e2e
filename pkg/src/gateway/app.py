"""
FastAPI scoring service for CoughScreen, loopback-only.

This is the HTTP server that:
- Binds to 127.0.0.1 by default (0.0.0.0 is rejected by the config layer)
- Serves one-shot scoring over a shared, read-only set of case models
- Applies security headers and request size limits
- Maps every failure to a JSON error body, never a stack trace
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from starlette.responses import JSONResponse

from src.audio.clip import InvalidClipError
from src.audio.wav import MalformedContainerError, UnsupportedEncodingError
from src.config import CoughScreenConfig
from src.constants import PROJECT_DISPLAY_NAME, PROJECT_VERSION
from src.errors import CoughScreenError
from src.gateway.middleware import RequestSizeLimitMiddleware, SecurityHeadersMiddleware, error_response
from src.pipeline.scoring import ModelNotLoadedError, Scorer
from src.utils.logging import get_logger

logger = get_logger("gateway")

# Errors caused by the request body itself
CLIENT_ERRORS = (MalformedContainerError, UnsupportedEncodingError, InvalidClipError)


def create_app(config: CoughScreenConfig, scorer: Scorer) -> FastAPI:
    """Create and configure the FastAPI application around a loaded scorer."""
    app = FastAPI(
        title=f"{PROJECT_DISPLAY_NAME} API",
        version=PROJECT_VERSION,
        description="One-shot cough recording scoring",
        docs_url=None,
        redoc_url=None,
    )

    app.state.config = config
    app.state.scorer = scorer

    _add_middleware(app, config)
    _register_routes(app)
    _register_error_handlers(app)

    @app.on_event("startup")
    async def on_startup() -> None:
        logger.info(
            "service_started",
            host=config.serving.host,
            port=config.serving.port,
            cases=scorer.cases,
            version=PROJECT_VERSION,
        )

    @app.on_event("shutdown")
    async def on_shutdown() -> None:
        logger.info("service_stopped")

    return app


def _add_middleware(app: FastAPI, config: CoughScreenConfig) -> None:
    app.add_middleware(RequestSizeLimitMiddleware, max_size_bytes=config.serving.max_body_bytes)
    app.add_middleware(SecurityHeadersMiddleware)


def _register_routes(app: FastAPI) -> None:
    from src.gateway.health import health_router
    from src.gateway.router import api_router

    app.include_router(health_router, prefix="/v1")
    app.include_router(api_router, prefix="/v1")


def _register_error_handlers(app: FastAPI) -> None:
    @app.exception_handler(ModelNotLoadedError)
    async def model_not_loaded(request: Request, exc: ModelNotLoadedError) -> JSONResponse:
        return error_response(503, exc.code, str(exc))

    @app.exception_handler(CoughScreenError)
    async def domain_error(request: Request, exc: CoughScreenError) -> JSONResponse:
        if isinstance(exc, CLIENT_ERRORS):
            logger.info("score_rejected", error=exc.code, message=str(exc))
            return error_response(400, exc.code, str(exc))
        logger.error("score_failed", error=exc.code, message=str(exc))
        return error_response(500, "InternalError", "Scoring failed.")

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError) -> JSONResponse:
        return error_response(400, "BadRequest", "Malformed request.")

    @app.exception_handler(Exception)
    async def unexpected_error(request: Request, exc: Exception) -> JSONResponse:
        logger.exception("unhandled_error", path=request.url.path)
        return error_response(500, "InternalError", "Unexpected server error.")
