"""Tests for the HTTP scoring service."""

from concurrent.futures import ThreadPoolExecutor

import httpx
import pytest
from fastapi.testclient import TestClient

from src.audio.routing import CaseId
from src.config import CoughScreenConfig, DspConfig, ServingConfig
from src.gateway.app import create_app
from src.pipeline.scoring import Scorer


@pytest.fixture
def scorer(case_models):
    return Scorer(case_models, DspConfig())


@pytest.fixture
def client(scorer):
    with TestClient(create_app(CoughScreenConfig(), scorer)) as c:
        yield c


class TestHealth:
    """Health endpoints."""

    def test_health(self, client):
        response = client.get("/v1/health")
        assert response.status_code == 200
        assert response.json() == {"status": "ok"}

    def test_detailed_lists_models(self, client, scorer):
        body = client.get("/v1/health/detailed").json()
        assert set(body["models"]) == {"CASE_4K", "CASE_8K", "CASE_48K"}
        assert body["models"]["CASE_8K"] == scorer.versions[CaseId.CASE_8K]
        assert body["threshold"] == 0.5

    def test_security_headers(self, client):
        response = client.get("/v1/health")
        assert response.headers["X-Content-Type-Options"] == "nosniff"
        assert response.headers["X-Frame-Options"] == "DENY"

    def test_no_docs(self, client):
        assert client.get("/docs").status_code == 404


class TestScore:
    """POST /v1/score."""

    def test_scores_wav(self, client, wav_bytes, scorer):
        body = wav_bytes(sample_rate=8000, seconds=0.6)
        response = client.post("/v1/score", content=body, headers={"Content-Type": "audio/wav"})
        assert response.status_code == 200
        payload = response.json()
        assert set(payload) == {"probability", "label", "case_id", "model_version", "latency_ms"}
        assert payload["case_id"] == "CASE_8K"
        assert payload["label"] in {"positive", "negative"}
        assert payload["probability"] == pytest.approx(scorer.score_bytes(body).probability)

    def test_48k_routes_through_wavegram_case(self, client, wav_bytes):
        response = client.post("/v1/score", content=wav_bytes(sample_rate=44100, seconds=0.6))
        assert response.status_code == 200
        assert response.json()["case_id"] == "CASE_48K"

    def test_concurrent_requests_match_sequential(self, client, wav_bytes, scorer):
        bodies = [wav_bytes(freq=200.0 + 50 * i, sample_rate=(4000, 8000, 48000)[i % 3], seconds=0.6) for i in range(16)]
        expected = [scorer.score_bytes(b).probability for b in bodies]
        with ThreadPoolExecutor(max_workers=16) as pool:
            responses = list(pool.map(lambda b: client.post("/v1/score", content=b), bodies))
        assert all(r.status_code == 200 for r in responses)
        assert [r.json()["probability"] for r in responses] == pytest.approx(expected)

    def test_empty_body(self, client):
        response = client.post("/v1/score", content=b"")
        assert response.status_code == 400
        assert response.json()["error"] == "EmptyBody"

    def test_malformed_body(self, client):
        response = client.post("/v1/score", content=b"RIFX" + b"\x00" * 40)
        assert response.status_code == 400
        assert response.json()["error"] == "MalformedContainer"
        assert "message" in response.json()

    def test_unsupported_encoding(self, client, wav_bytes):
        data = bytearray(wav_bytes())
        data[20:22] = (2).to_bytes(2, "little")
        response = client.post("/v1/score", content=bytes(data))
        assert response.status_code == 400
        assert response.json()["error"] == "UnsupportedEncoding"

    def test_too_large(self, scorer, wav_bytes):
        config = CoughScreenConfig(serving=ServingConfig(max_body_bytes=1000))
        with TestClient(create_app(config, scorer)) as small:
            response = small.post("/v1/score", content=wav_bytes(seconds=1.0))
        assert response.status_code == 413
        assert response.json()["error"] == "RequestTooLarge"

    def test_case_without_model(self, case_models, wav_bytes):
        partial = Scorer([m for m in case_models if m.case.case_id.value != "CASE_4K"], DspConfig())
        with TestClient(create_app(CoughScreenConfig(), partial)) as c:
            response = c.post("/v1/score", content=wav_bytes(sample_rate=4000))
        assert response.status_code == 503
        assert response.json()["error"] == "ModelNotLoaded"

    def test_get_not_allowed(self, client):
        assert client.get("/v1/score").status_code == 405

    def test_unexpected_failure_hides_details(self, scorer, wav_bytes, monkeypatch):
        def boom(body: bytes) -> None:
            raise RuntimeError("secret internals")

        monkeypatch.setattr(scorer, "score_bytes", boom)
        with TestClient(create_app(CoughScreenConfig(), scorer), raise_server_exceptions=False) as c:
            response = c.post("/v1/score", content=wav_bytes())
        assert response.status_code == 500
        assert response.json() == {"error": "InternalError", "message": "Unexpected server error."}


class TestStreamedBodies:
    """Bodies without a Content-Length are bounded while they are read."""

    @pytest.fixture
    def small_app(self, scorer):
        return create_app(CoughScreenConfig(serving=ServingConfig(max_body_bytes=1000)), scorer)

    @pytest.mark.asyncio
    async def test_chunked_body_over_limit(self, small_app):
        async def chunks():
            for _ in range(64):
                yield b"\x00" * 400

        transport = httpx.ASGITransport(app=small_app)
        async with httpx.AsyncClient(transport=transport, base_url="http://127.0.0.1") as client:
            response = await client.post("/v1/score", content=chunks())
        assert response.status_code == 413
        assert response.json()["error"] == "RequestTooLarge"
        assert "content-length" not in response.request.headers

    def test_chunked_body_over_limit_sync_client(self, scorer):
        config = CoughScreenConfig(serving=ServingConfig(max_body_bytes=1000))
        with TestClient(create_app(config, scorer)) as small:
            response = small.post("/v1/score", content=iter([b"\x00" * 600, b"\x00" * 600]))
        assert response.status_code == 413
        assert response.json()["error"] == "RequestTooLarge"

    @pytest.mark.asyncio
    async def test_chunked_body_under_limit_is_scored(self, scorer, wav_bytes):
        body = wav_bytes(sample_rate=8000, seconds=0.6)

        async def chunks():
            for start in range(0, len(body), 1024):
                yield body[start : start + 1024]

        transport = httpx.ASGITransport(app=create_app(CoughScreenConfig(), scorer))
        async with httpx.AsyncClient(transport=transport, base_url="http://127.0.0.1") as client:
            response = await client.post("/v1/score", content=chunks())
        assert response.status_code == 200
        assert response.json()["probability"] == pytest.approx(scorer.score_bytes(body).probability)

    @pytest.mark.asyncio
    async def test_health_over_asgi(self, small_app):
        transport = httpx.ASGITransport(app=small_app)
        async with httpx.AsyncClient(transport=transport, base_url="http://127.0.0.1") as client:
            response = await client.get("/v1/health")
        assert response.status_code == 200
        assert response.json() == {"status": "ok"}
