import json
import math
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import urlparse

import pytest

from kart.errors import ProtocolError, TransportError, UnknownTokenError
from kart.lexicon import build_vocabulary
from kart.scorer import external_scorer_connect, score_masked, uniform_scorer

VOCAB = ("[cls]", "[sep]", "[mask]", "[unk]", "alpha", "beta", "gamma")


class StubHandler(BaseHTTPRequestHandler):
    """Minimal protocol endpoint serving a uniform distribution."""

    protocol_header = "1"

    def log_message(self, *args):
        pass

    def _send(self, code, payload):
        body = json.dumps(payload).encode()
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        if self.protocol_header is not None:
            self.send_header("X-KART-Protocol", self.protocol_header)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        parsed = urlparse(self.path)
        if parsed.path == "/health":
            self._send(200, {"status": "ok", "model_id": "stub-uniform"})
        elif parsed.path == "/vocab":
            self._send(
                200,
                {"vocab": list(VOCAB), "mask_token": "[mask]",
                 "model_id": "stub-uniform"},
            )
        elif parsed.path == "/embeddings":
            self._send(400, {"error": "unsupported capability: embeddings"})
        else:
            self._send(404, {"error": "no such endpoint"})

    def do_POST(self):
        if self.path != "/score":
            self._send(404, {"error": "no such endpoint"})
            return
        length = int(self.headers.get("Content-Length", 0))
        req = json.loads(self.rfile.read(length))
        tokens = req["tokens"]
        positions = req["mask_positions"]
        for p in positions:
            if not (0 <= p < len(tokens)):
                self._send(400, {"error": f"mask position {p} out of range"})
                return
            if tokens[p] != "[mask]":
                self._send(
                    400, {"error": f"position {p} does not hold the mask token"}
                )
                return
        lp = -math.log(len(VOCAB))
        log_probs = {}
        for p in positions:
            cand = req["candidates"][str(p)]
            if cand == "full_vocab":
                log_probs[str(p)] = {t: lp for t in VOCAB}
            else:
                for t in cand:
                    if t not in VOCAB:
                        self._send(400, {"error": f"unknown token {t!r}"})
                        return
                log_probs[str(p)] = {t: lp for t in cand}
        self._send(200, {"log_probs": log_probs, "model_id": "stub-uniform"})


class WrongVersionHandler(StubHandler):
    protocol_header = "999"


@pytest.fixture()
def stub_endpoint():
    server = ThreadingHTTPServer(("127.0.0.1", 0), StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


@pytest.fixture()
def wrong_version_endpoint():
    server = ThreadingHTTPServer(("127.0.0.1", 0), WrongVersionHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


def test_connect_fetches_vocabulary(stub_endpoint):
    scorer = external_scorer_connect(stub_endpoint)
    assert scorer.vocabulary == VOCAB
    assert scorer.model_id == "stub-uniform"
    assert scorer.kind == "external"


def test_remote_uniform_parity_with_builtin(stub_endpoint):
    """Identical queries against the stub and the in-process uniform scorer."""
    remote = external_scorer_connect(stub_endpoint)
    local = uniform_scorer(build_vocabulary([list(VOCAB)]))
    # same vocab contents (order may differ), same size: same uniform value
    tokens = ["[cls]", "[mask]", "alpha", "[sep]"]
    r = score_masked(remote, tokens, [1], {1: "full_vocab"})[1]
    l = score_masked(local, tokens, [1], {1: "full_vocab"})[1]
    assert set(r) == set(l)
    for token in r:
        assert r[token] == pytest.approx(l[token], abs=1e-12)
    total = sum(math.exp(v) for v in r.values())
    assert abs(total - 1.0) <= 1e-6


def test_remote_candidate_subset(stub_endpoint):
    remote = external_scorer_connect(stub_endpoint)
    tokens = ["[cls]", "[mask]", "alpha", "[sep]"]
    out = score_masked(remote, tokens, [1], {1: ["alpha", "beta"]})[1]
    assert set(out) == {"alpha", "beta"}


def test_remote_unknown_candidate_raises(stub_endpoint):
    remote = external_scorer_connect(stub_endpoint)
    with pytest.raises(UnknownTokenError):
        score_masked(remote, ["[cls]", "[mask]", "[sep]"], [1], {1: ["zzz"]})


def test_remote_embeddings_unsupported(stub_endpoint):
    from kart.errors import UnsupportedCapabilityError

    remote = external_scorer_connect(stub_endpoint)
    with pytest.raises(UnsupportedCapabilityError):
        remote.export_embeddings(["alpha"])


def test_version_mismatch_is_protocol_error(wrong_version_endpoint):
    with pytest.raises(ProtocolError, match="version"):
        external_scorer_connect(wrong_version_endpoint)


def test_unreachable_endpoint_is_transport_error():
    with pytest.raises(TransportError):
        external_scorer_connect("http://127.0.0.1:9")  # discard port


def test_conformance_suite_against_stub(stub_endpoint):
    from kart.conformance import run_conformance_suite

    results = run_conformance_suite(stub_endpoint)
    failed = [r for r in results if not r.passed]
    assert failed == []
