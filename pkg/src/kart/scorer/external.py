"""Client side of the scorer wire protocol.

A remote scorer is any HTTP service exposing:

    GET  /health                    -> {"status": "ok", "model_id": ...}
    GET  /vocab                     -> {"vocab": [...], "mask_token": ...}
    GET  /embeddings?tokens=a,b     -> {"embeddings": {token: [floats]}}
    POST /score                     -> {"log_probs": {pos: {token: lp}}}
    POST /score_batch               -> {"results": [score responses]}

All responses carry the X-KART-Protocol version header. Transport failures
raise TransportError (retryable); contract violations raise ProtocolError.
"""

from __future__ import annotations

import numpy as np
import requests

from ..errors import (
    ProtocolError,
    TransportError,
    UnknownTokenError,
    UnsupportedCapabilityError,
)
from ..lexicon import Tokenizer
from .base import FULL_VOCAB, ScorerModel

PROTOCOL_VERSION = "1"
PROTOCOL_HEADER = "X-KART-Protocol"
DEFAULT_TIMEOUT = 30.0


class RemoteScorer(ScorerModel):
    kind = "external"

    def __init__(self, endpoint: str, session: requests.Session, model_id: str,
                 tokenizer: Tokenizer):
        super().__init__(
            tokenizer,
            provenance={
                "kind": "external",
                "endpoint": endpoint,
                "model_id": model_id,
                "anonymizer": "unknown",
            },
        )
        self.endpoint = endpoint.rstrip("/")
        self.session = session
        self.model_id = model_id

    def _request(self, method: str, path: str, **kwargs):
        url = f"{self.endpoint}{path}"
        try:
            resp = self.session.request(
                method, url, timeout=DEFAULT_TIMEOUT, **kwargs
            )
        except requests.RequestException as e:
            raise TransportError(f"{method} {url}: {e}") from e
        _check_protocol_header(resp)
        if resp.status_code == 400:
            detail = _error_detail(resp)
            if "unknown token" in detail or "vocabulary" in detail:
                raise UnknownTokenError(detail)
            if "unsupported" in detail:
                raise UnsupportedCapabilityError(detail)
            raise ProtocolError(f"{method} {path}: {detail}")
        if resp.status_code >= 500:
            raise TransportError(f"{method} {path}: HTTP {resp.status_code}")
        if resp.status_code != 200:
            raise ProtocolError(f"{method} {path}: HTTP {resp.status_code}")
        return resp.json()

    def _log_distributions(self, ids, mask_positions):
        raise NotImplementedError("remote scoring goes through score_masked")

    def score_request(self, tokens, mask_positions, candidates) -> dict:
        body = {
            "tokens": list(tokens),
            "mask_positions": sorted(int(p) for p in mask_positions),
            "candidates": {
                str(p): (c if c == FULL_VOCAB else list(c))
                for p, c in candidates.items()
            },
        }
        data = self._request("POST", "/score", json=body)
        if "log_probs" not in data:
            raise ProtocolError("score response is missing log_probs")
        got = {int(p) for p in data["log_probs"]}
        if got != set(int(p) for p in mask_positions):
            raise ProtocolError(
                f"score response covers positions {sorted(got)}, "
                f"requested {sorted(mask_positions)}"
            )
        return {
            int(p): {t: float(lp) for t, lp in dist.items()}
            for p, dist in data["log_probs"].items()
        }

    def export_embeddings(self, tokens):
        if not tokens:
            return {}
        data = self._request(
            "GET", "/embeddings", params={"tokens": ",".join(tokens)}
        )
        if "embeddings" not in data:
            raise ProtocolError("embeddings response is missing embeddings")
        return {
            t: np.asarray(vec, dtype=np.float32)
            for t, vec in data["embeddings"].items()
        }


def _check_protocol_header(resp) -> None:
    version = resp.headers.get(PROTOCOL_HEADER)
    if version is None:
        raise ProtocolError(
            f"endpoint did not send {PROTOCOL_HEADER}; not a scorer service?"
        )
    if version != PROTOCOL_VERSION:
        raise ProtocolError(
            f"protocol version mismatch: endpoint speaks {version}, "
            f"client speaks {PROTOCOL_VERSION}"
        )


def _error_detail(resp) -> str:
    try:
        return str(resp.json().get("error", resp.text))
    except ValueError:
        return resp.text


def external_scorer_connect(
    endpoint: str, session: requests.Session | None = None
) -> RemoteScorer:
    """Handshake with a scorer service and wrap it as a ScorerModel."""
    session = session or requests.Session()
    endpoint = endpoint.rstrip("/")
    try:
        health = session.get(f"{endpoint}/health", timeout=DEFAULT_TIMEOUT)
    except requests.RequestException as e:
        raise TransportError(f"cannot reach {endpoint}: {e}") from e
    _check_protocol_header(health)
    if health.status_code != 200 or health.json().get("status") != "ok":
        raise ProtocolError(f"unhealthy endpoint: HTTP {health.status_code}")
    model_id = str(health.json().get("model_id", "unknown"))

    try:
        vocab_resp = session.get(f"{endpoint}/vocab", timeout=DEFAULT_TIMEOUT)
    except requests.RequestException as e:
        raise TransportError(f"cannot fetch vocabulary: {e}") from e
    _check_protocol_header(vocab_resp)
    payload = vocab_resp.json()
    if "vocab" not in payload or "mask_token" not in payload:
        raise ProtocolError("vocab response must carry vocab and mask_token")
    tokenizer = Tokenizer(vocabulary=tuple(payload["vocab"]))
    return RemoteScorer(
        endpoint=endpoint,
        session=session,
        model_id=model_id,
        tokenizer=tokenizer,
    )
