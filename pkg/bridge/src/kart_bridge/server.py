"""The scoring service.

Endpoints:

    GET  /health                      liveness + model id
    GET  /vocab                       vocabulary and mask token
    GET  /embeddings?tokens=a,b,c     token embedding vectors (400 when the
                                      backend has none)
    POST /score                       one scoring request
    POST /score_batch                 {"requests": [...]} -> {"results": [...]}

A scoring request is {"tokens": [...], "mask_positions": [...],
"candidates": {"<pos>": [...] | "full_vocab"}}; the response maps each
position to token log-probabilities. All masks in a request are applied
simultaneously. Every response carries X-KART-Protocol: 1. Malformed
requests (bad positions, non-mask tokens at masked positions, unknown
candidates) return HTTP 400 with a JSON error body.
"""

from __future__ import annotations

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .scoring import Backend, RequestError

PROTOCOL_VERSION = "1"
FULL_VOCAB = "full_vocab"


class ScoreRequest(BaseModel):
    tokens: list[str]
    mask_positions: list[int]
    candidates: dict[str, list[str] | str]


class BatchRequest(BaseModel):
    requests: list[ScoreRequest]


def _validate_and_score(backend: Backend, req: ScoreRequest) -> dict:
    n = len(req.tokens)
    if not req.mask_positions:
        raise RequestError("mask_positions must be non-empty")
    positions = sorted(set(req.mask_positions))
    for p in positions:
        if not (0 <= p < n):
            raise RequestError(f"mask position {p} out of range for {n} tokens")
        if req.tokens[p] != backend.mask_token:
            raise RequestError(
                f"position {p} holds {req.tokens[p]!r}, expected mask token "
                f"{backend.mask_token!r}"
            )
    if set(req.candidates) != {str(p) for p in positions}:
        raise RequestError("candidates must cover exactly the masked positions")
    vocab_set = set(backend.vocab)
    for key, cand in req.candidates.items():
        if cand == FULL_VOCAB:
            continue
        if isinstance(cand, str):
            raise RequestError(f"candidates[{key}] must be a list or 'full_vocab'")
        for token in cand:
            if token not in vocab_set:
                raise RequestError(f"unknown token {token!r} in vocabulary")

    dists = backend.log_distributions(req.tokens, positions)
    log_probs: dict[str, dict[str, float]] = {}
    for p in positions:
        logp = dists[p]
        cand = req.candidates[str(p)]
        if cand == FULL_VOCAB:
            log_probs[str(p)] = {
                t: float(logp[i]) for i, t in enumerate(backend.vocab)
            }
        else:
            index = {t: i for i, t in enumerate(backend.vocab)}
            log_probs[str(p)] = {t: float(logp[index[t]]) for t in cand}
    return {"log_probs": log_probs, "model_id": backend.model_id}


def create_app(backend: Backend) -> FastAPI:
    app = FastAPI(title="kart-bridge", docs_url=None, redoc_url=None)

    @app.middleware("http")
    async def add_protocol_header(request: Request, call_next):
        response = await call_next(request)
        response.headers["X-KART-Protocol"] = PROTOCOL_VERSION
        return response

    @app.exception_handler(RequestError)
    async def request_error_handler(request: Request, exc: RequestError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "model_id": backend.model_id}

    @app.get("/vocab")
    def vocab():
        return {
            "vocab": backend.vocab,
            "mask_token": backend.mask_token,
            "model_id": backend.model_id,
        }

    @app.get("/embeddings")
    def embeddings(tokens: str = Query(default="")):
        wanted = [t for t in tokens.split(",") if t]
        return {
            "embeddings": backend.embeddings(wanted),
            "model_id": backend.model_id,
        }

    @app.post("/score")
    def score(req: ScoreRequest):
        return _validate_and_score(backend, req)

    @app.post("/score_batch")
    def score_batch(batch: BatchRequest):
        return {
            "results": [_validate_and_score(backend, r) for r in batch.requests],
            "model_id": backend.model_id,
        }

    return app
