"""Transformer backend, exercised with a tiny randomly initialized BERT so
no checkpoint download is needed."""

import math

import pytest

transformers = pytest.importorskip("transformers")
torch = pytest.importorskip("torch")

from fastapi.testclient import TestClient

from kart_bridge.hf_backend import TransformerBackend
from kart_bridge.server import create_app

WORDS = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "the", "patient",
         "is", "a", "40", "year", "old", "male", "stable", "leukemia",
         "phone", "alice", "smith"]


@pytest.fixture(scope="module")
def tiny_bert(tmp_path_factory):
    from tokenizers import Tokenizer
    from tokenizers.models import WordPiece
    from tokenizers.pre_tokenizers import Whitespace

    tok_model = Tokenizer(
        WordPiece(vocab={w: i for i, w in enumerate(WORDS)}, unk_token="[UNK]")
    )
    tok_model.pre_tokenizer = Whitespace()
    tokenizer = transformers.PreTrainedTokenizerFast(
        tokenizer_object=tok_model,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )
    config = transformers.BertConfig(
        vocab_size=len(WORDS),
        hidden_size=16,
        num_hidden_layers=1,
        num_attention_heads=2,
        intermediate_size=32,
        max_position_embeddings=32,
    )
    torch.manual_seed(0)
    model = transformers.BertForMaskedLM(config)
    return TransformerBackend("tiny-test-bert", tokenizer=tokenizer, model=model)


@pytest.fixture(scope="module")
def client(tiny_bert):
    return TestClient(create_app(tiny_bert))


def test_vocab_lowercases_specials(client):
    body = client.get("/vocab").json()
    assert body["mask_token"] == "[mask]"
    assert "[mask]" in body["vocab"]
    assert "[cls]" in body["vocab"]
    assert "the" in body["vocab"]


def test_full_vocab_normalized(client):
    tokens = ["[cls]", "the", "[mask]", "is", "stable", "[sep]"]
    resp = client.post(
        "/score",
        json={
            "tokens": tokens,
            "mask_positions": [2],
            "candidates": {"2": "full_vocab"},
        },
    )
    assert resp.status_code == 200
    dist = resp.json()["log_probs"]["2"]
    assert len(dist) == len(WORDS)
    total = sum(math.exp(v) for v in dist.values())
    assert abs(total - 1.0) <= 1e-6


def test_simultaneous_masking_differs_from_single(client):
    """Masking both name slots at once must condition on neither."""
    pair = ["[cls]", "[mask]", "[mask]", "is", "a", "40", "year", "old",
            "male", "[sep]"]
    single = ["[cls]", "[mask]", "smith", "is", "a", "40", "year", "old",
              "male", "[sep]"]
    both = client.post(
        "/score",
        json={
            "tokens": pair,
            "mask_positions": [1, 2],
            "candidates": {"1": ["alice"], "2": ["smith"]},
        },
    ).json()["log_probs"]
    alone = client.post(
        "/score",
        json={
            "tokens": single,
            "mask_positions": [1],
            "candidates": {"1": ["alice"]},
        },
    ).json()["log_probs"]
    # contextualized models see different contexts, so scores differ
    assert both["1"]["alice"] != alone["1"]["alice"]


def test_embeddings_available(client):
    resp = client.get("/embeddings", params={"tokens": "alice,smith"})
    assert resp.status_code == 200
    emb = resp.json()["embeddings"]
    assert len(emb["alice"]) == 16


def test_bad_mask_position_is_400(client):
    resp = client.post(
        "/score",
        json={
            "tokens": ["[cls]", "[mask]", "[sep]"],
            "mask_positions": [7],
            "candidates": {"7": "full_vocab"},
        },
    )
    assert resp.status_code == 400
