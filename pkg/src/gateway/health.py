"""Health check endpoints."""

from __future__ import annotations

from fastapi import APIRouter, Request

from src.constants import PROJECT_DISPLAY_NAME, PROJECT_VERSION

health_router = APIRouter(tags=["health"])


@health_router.get("/health")
async def health_check() -> dict:
    """Liveness only; touches no model state."""
    return {"status": "ok"}


@health_router.get("/health/detailed")
async def detailed_health(request: Request) -> dict:
    """Loaded cases and their model versions."""
    scorer = request.app.state.scorer
    return {
        "status": "ok",
        "service": PROJECT_DISPLAY_NAME,
        "version": PROJECT_VERSION,
        "models": {case_id.value: version for case_id, version in sorted(scorer.versions.items())},
        "threshold": scorer.threshold,
    }
