"""The HTTP surface: POST /embed and GET /healthz.

Error mapping is part of the contract: 400 for malformed payloads, 422 for
an unknown model tag, 507 for audio too short to fill one window.
"""

from __future__ import annotations

import os

from fastapi import FastAPI, HTTPException, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from .audio import AudioDecodeError, decode_pcm16_b64, resample, slice_windows
from .matrix import matrix_payload
from .models import build_registry


class EmbedRequest(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    audio: str = Field(description="base64 little-endian 16-bit PCM")
    sample_rate_hz: int = Field(gt=0)
    segment_span_s: float = Field(gt=0)
    kind: str = Field(pattern="^(embedding|logits)$")
    model_tag: str = "spectral-16"


def create_app(model_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="embed-service")
    app.state.registry = build_registry(
        model_dir if model_dir is not None else os.environ.get("MODEL_DIR")
    )

    @app.exception_handler(RequestValidationError)
    async def malformed_payload(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.get("/healthz")
    def healthz():
        registry = app.state.registry
        return {
            "status": "ok",
            "models": {tag: model.dim for tag, model in registry.items()},
        }

    @app.post("/embed")
    def embed(request: EmbedRequest) -> Response:
        model = app.state.registry.get(request.model_tag)
        if model is None:
            raise HTTPException(422, f"unknown model_tag {request.model_tag!r}")
        try:
            samples = decode_pcm16_b64(request.audio)
        except AudioDecodeError as exc:
            raise HTTPException(400, str(exc)) from exc
        samples = resample(samples, request.sample_rate_hz, model.native_rate_hz)
        windows = slice_windows(samples, model.native_rate_hz, request.segment_span_s)
        if windows.shape[0] == 0:
            raise HTTPException(
                507,
                f"audio shorter than one {request.segment_span_s:g} s window",
            )
        payload = matrix_payload(
            model.rows(windows), request.segment_span_s, request.model_tag, request.kind
        )
        return Response(content=payload, media_type="application/octet-stream")

    return app


app = create_app()
