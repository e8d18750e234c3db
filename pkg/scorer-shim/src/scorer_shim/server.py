"""HTTP surface of the shim: POST /v1/score and GET /healthz.

The request body is parsed by hand rather than through framework validation
so contract violations map to the documented status codes: 400 for a
malformed body, 413 for an oversized batch, 500 with an error body when
inference itself fails.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse

from .backends import DEFAULT_MODEL_ID, CrossEncoderBackend, EchoBackend


@dataclass(frozen=True)
class ShimConfig:
    model_id: str = DEFAULT_MODEL_ID
    host: str = "127.0.0.1"
    port: int = 8080
    max_batch: int = 64
    max_seq_len: int = 512
    precision: str = "float32"
    echo: bool = False

    def __post_init__(self) -> None:
        if self.max_batch < 1:
            raise ValueError("max_batch must be >= 1")
        if self.precision not in ("float32", "float16"):
            raise ValueError(f"unknown precision {self.precision!r}")


def _parse_pairs(payload) -> list[tuple[str, str]] | None:
    if not isinstance(payload, dict):
        return None
    pairs = payload.get("pairs")
    if not isinstance(pairs, list):
        return None
    parsed = []
    for pair in pairs:
        if not isinstance(pair, dict):
            return None
        premise = pair.get("premise")
        hypothesis = pair.get("hypothesis")
        if not isinstance(premise, str) or not isinstance(hypothesis, str):
            return None
        parsed.append((premise, hypothesis))
    return parsed


def create_app(config: ShimConfig, backend=None) -> FastAPI:
    app = FastAPI(title="scorer-shim", docs_url=None, redoc_url=None)
    if backend is None:
        backend = EchoBackend() if config.echo else CrossEncoderBackend(
            config.model_id, max_seq_len=config.max_seq_len, precision=config.precision
        )
    # inference is the bottleneck; one request at a time per model instance
    inference_lock = threading.Lock()

    @app.get("/healthz")
    def healthz() -> PlainTextResponse:
        return PlainTextResponse("ok")

    @app.post("/v1/score")
    async def score(request: Request) -> JSONResponse:
        try:
            payload = await request.json()
        except Exception:
            return JSONResponse({"error": "body is not valid JSON"}, status_code=400)
        pairs = _parse_pairs(payload)
        if pairs is None:
            return JSONResponse(
                {"error": "expected {\"pairs\": [{\"premise\", \"hypothesis\"}, ...]}"},
                status_code=400,
            )
        if len(pairs) > config.max_batch:
            return JSONResponse(
                {"error": f"batch of {len(pairs)} exceeds max {config.max_batch}"},
                status_code=413,
            )
        try:
            with inference_lock:
                scores = backend.score_pairs(pairs)
        except Exception as exc:
            return JSONResponse({"error": f"inference failed: {exc}"}, status_code=500)
        scores = [min(1.0, max(0.0, float(s))) for s in scores]
        return JSONResponse({"scores": scores})

    return app


def serve(config: ShimConfig) -> None:
    """Run the shim until interrupted."""
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
