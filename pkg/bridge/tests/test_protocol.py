import math

import pytest
from fastapi.testclient import TestClient

from kart_bridge import backend_for, create_app, load_model_dir


@pytest.fixture(scope="module")
def client(count_model_dir):
    path, _ = count_model_dir
    app = create_app(backend_for(load_model_dir(path)))
    return TestClient(app)


def probe_tokens(client):
    vocab = client.get("/vocab").json()["vocab"]
    words = [t for t in vocab if t.isalpha()][:4]
    return ["[cls]", "[mask]", *words, "[sep]"]


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "ok"
    assert body["model_id"].startswith("count_nb:")
    assert resp.headers["X-KART-Protocol"] == "1"


def test_vocab_contract(client):
    body = client.get("/vocab").json()
    assert body["mask_token"] == "[mask]"
    assert "[mask]" in body["vocab"]
    assert len(body["vocab"]) == len(set(body["vocab"]))


def test_full_vocab_normalization(client):
    tokens = probe_tokens(client)
    resp = client.post(
        "/score",
        json={
            "tokens": tokens,
            "mask_positions": [1],
            "candidates": {"1": "full_vocab"},
        },
    )
    assert resp.status_code == 200
    dist = resp.json()["log_probs"]["1"]
    total = sum(math.exp(v) for v in dist.values())
    assert abs(total - 1.0) <= 1e-6


def test_simultaneous_masks_one_request(client):
    vocab = client.get("/vocab").json()["vocab"]
    words = [t for t in vocab if t.isalpha()][:3]
    tokens = ["[cls]", "[mask]", "[mask]", *words, "[sep]"]
    resp = client.post(
        "/score",
        json={
            "tokens": tokens,
            "mask_positions": [1, 2],
            "candidates": {"1": "full_vocab", "2": "full_vocab"},
        },
    )
    assert resp.status_code == 200
    body = resp.json()["log_probs"]
    assert set(body) == {"1", "2"}


def test_candidate_slice(client):
    tokens = probe_tokens(client)
    cand = [tokens[2], tokens[3]]
    resp = client.post(
        "/score",
        json={
            "tokens": tokens,
            "mask_positions": [1],
            "candidates": {"1": cand},
        },
    )
    assert resp.status_code == 200
    assert set(resp.json()["log_probs"]["1"]) == set(cand)


def test_mask_position_out_of_range_is_400(client):
    tokens = probe_tokens(client)
    resp = client.post(
        "/score",
        json={
            "tokens": tokens,
            "mask_positions": [99],
            "candidates": {"99": "full_vocab"},
        },
    )
    assert resp.status_code == 400
    assert "error" in resp.json()


def test_negative_mask_position_is_400(client):
    tokens = probe_tokens(client)
    resp = client.post(
        "/score",
        json={
            "tokens": tokens,
            "mask_positions": [-1],
            "candidates": {"-1": "full_vocab"},
        },
    )
    assert resp.status_code == 400


def test_unmasked_position_is_400(client):
    tokens = probe_tokens(client)
    resp = client.post(
        "/score",
        json={
            "tokens": tokens,
            "mask_positions": [2],
            "candidates": {"2": "full_vocab"},
        },
    )
    assert resp.status_code == 400
    assert "expected mask token" in resp.json()["error"]


def test_unknown_candidate_is_400(client):
    tokens = probe_tokens(client)
    resp = client.post(
        "/score",
        json={
            "tokens": tokens,
            "mask_positions": [1],
            "candidates": {"1": ["zzz-not-in-vocab"]},
        },
    )
    assert resp.status_code == 400
    assert "unknown token" in resp.json()["error"]


def test_empty_mask_positions_is_400(client):
    tokens = probe_tokens(client)
    resp = client.post(
        "/score",
        json={"tokens": tokens, "mask_positions": [], "candidates": {}},
    )
    assert resp.status_code == 400


def test_stateless_identical_responses(client):
    tokens = probe_tokens(client)
    body = {
        "tokens": tokens,
        "mask_positions": [1],
        "candidates": {"1": "full_vocab"},
    }
    a = client.post("/score", json=body).json()
    b = client.post("/score", json=body).json()
    assert a == b


def test_score_batch(client):
    tokens = probe_tokens(client)
    one = {
        "tokens": tokens,
        "mask_positions": [1],
        "candidates": {"1": "full_vocab"},
    }
    resp = client.post("/score_batch", json={"requests": [one, one]})
    assert resp.status_code == 200
    results = resp.json()["results"]
    assert len(results) == 2
    assert results[0] == results[1]
    single = client.post("/score", json=one).json()
    assert results[0]["log_probs"] == single["log_probs"]


def test_count_backend_has_no_embeddings(client):
    resp = client.get("/embeddings", params={"tokens": "[mask]"})
    assert resp.status_code == 400
    assert "unsupported" in resp.json()["error"]


def test_mlm_backend_serves_embeddings(mlm_model_dir):
    path, model = mlm_model_dir
    app = create_app(backend_for(load_model_dir(path)))
    client = TestClient(app)
    token = model.tokenizer.vocabulary[10]
    resp = client.get("/embeddings", params={"tokens": token})
    assert resp.status_code == 200
    vec = resp.json()["embeddings"][token]
    assert len(vec) == 16
