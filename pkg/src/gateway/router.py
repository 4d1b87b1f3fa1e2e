"""
API routes for the CoughScreen scoring service.

POST /v1/score takes a raw WAV body and returns one ScoreResponse. Scoring
is CPU-bound and runs in the threadpool so the event loop stays free for
health checks.
"""

from __future__ import annotations

from fastapi import APIRouter, Request
from starlette.concurrency import run_in_threadpool

from src.gateway.middleware import error_response
from src.pipeline.scoring import ScoreResponse
from src.utils.logging import get_logger

logger = get_logger("router")

api_router = APIRouter()


# ──────────────────────── Scoring ────────────────────────


@api_router.post("/score", response_model=ScoreResponse)
async def score(request: Request):  # type: ignore[no-untyped-def]
    """Score one WAV recording."""
    limit = request.app.state.config.serving.max_body_bytes
    chunks: list[bytes] = []
    received = 0
    # Chunked uploads carry no Content-Length; count as we read and stop at the limit
    async for chunk in request.stream():
        received += len(chunk)
        if received > limit:
            logger.warning("request_too_large", received=received, limit=limit)
            return error_response(413, "RequestTooLarge", f"Body exceeds the {limit}-byte limit.")
        chunks.append(chunk)
    body = b"".join(chunks)
    if not body:
        return error_response(400, "EmptyBody", "Request body must contain a WAV file.")
    return await run_in_threadpool(request.app.state.scorer.score_bytes, body)
