"""Masked-token probability sources.

Every scorer answers one query shape: given a token sequence where some
positions hold the mask token, return per-position log-probability
distributions conditioned on the sequence with all requested positions
masked at once. Full-vocabulary answers are normalized log-softmax values;
candidate-list answers are the same values sliced down, so ratios between
candidates are preserved.
"""

from __future__ import annotations

import hashlib
import json
import math

import numpy as np

from ..errors import KartError, UnknownTokenError, UnsupportedCapabilityError
from ..lexicon import MASK_TOKEN, Tokenizer, is_placeholder
from ..spans import Corpus
from .config import TrainingConfig

FULL_VOCAB = "full_vocab"


class ScorerModel:
    kind: str = "abstract"

    def __init__(self, tokenizer: Tokenizer, provenance: dict | None = None):
        self.tokenizer = tokenizer
        self.provenance = dict(provenance or {})

    @property
    def vocabulary(self) -> tuple[str, ...]:
        return self.tokenizer.vocabulary

    # Subclasses: log-softmax over the vocabulary for each masked position.
    def _log_distributions(
        self, ids: np.ndarray, mask_positions: tuple[int, ...]
    ) -> dict[int, np.ndarray]:
        raise NotImplementedError

    def encode(self, tokens: list[str]) -> np.ndarray:
        """Map tokens to ids; unknown context tokens degrade to [unk]."""
        unk = self.tokenizer.token_id("[unk]")
        return np.array(
            [
                self.tokenizer.token_id(t) if self.tokenizer.has(t) else unk
                for t in tokens
            ],
            dtype=np.int64,
        )

    def export_embeddings(self, tokens: list[str]) -> dict[str, np.ndarray]:
        raise UnsupportedCapabilityError(
            f"{self.kind} scorers do not expose embeddings"
        )


def score_masked(
    model: ScorerModel,
    tokens: list[str],
    mask_positions,
    candidates: dict,
) -> dict[int, dict[str, float]]:
    """Per-position log-probabilities for the requested candidates.

    candidates maps each masked position to a token list or "full_vocab".
    Every requested position must hold the mask token, and every candidate
    must be in vocabulary (unknown candidates raise, never score zero).
    """
    positions = tuple(sorted(set(int(p) for p in mask_positions)))
    n = len(tokens)
    for p in positions:
        if not (0 <= p < n):
            raise KartError(f"mask position {p} outside sequence of length {n}")
        if tokens[p] != MASK_TOKEN:
            raise KartError(
                f"position {p} holds {tokens[p]!r}, expected {MASK_TOKEN!r}"
            )
    if set(candidates) != set(positions):
        raise KartError("candidates must cover exactly the masked positions")
    for p, cand in candidates.items():
        if cand == FULL_VOCAB:
            continue
        for token in cand:
            if not model.tokenizer.has(token):
                raise UnknownTokenError(
                    f"candidate {token!r} at position {p} is not in vocabulary"
                )

    if hasattr(model, "score_request"):
        return model.score_request(tokens, positions, candidates)

    ids = model.encode(tokens)
    dists = model._log_distributions(ids, positions)
    out: dict[int, dict[str, float]] = {}
    vocab = model.vocabulary
    for p in positions:
        logp = dists[p]
        cand = candidates[p]
        if cand == FULL_VOCAB:
            out[p] = {vocab[i]: float(logp[i]) for i in range(len(vocab))}
        else:
            out[p] = {
                token: float(logp[model.tokenizer.token_id(token)])
                for token in cand
            }
    return out


def log_softmax(scores: np.ndarray) -> np.ndarray:
    m = float(np.max(scores))
    shifted = scores - m
    return shifted - math.log(float(np.sum(np.exp(shifted))))


def training_sequences(
    corpus: Corpus, tokenizer: Tokenizer, max_len: int
) -> list[list[str]]:
    """Tokenized documents with every placeholder token deleted, wrapped in
    boundary tokens and truncated. Matches the attack-side preprocessing, so
    masked corpora train on text that never shows a placeholder pattern."""
    seqs = []
    for doc in corpus.documents:
        toks = ["[cls]"]
        toks.extend(t for t in tokenizer.tokenize(doc.text) if not is_placeholder(t))
        toks.append("[sep]")
        seqs.append(toks[:max_len])
    return seqs


def corpus_vocabulary(
    corpus: Corpus, extra_tokens: tuple[str, ...] = ()
) -> Tokenizer:
    """Frozen tokenizer covering the corpus plus any required candidates."""
    from ..lexicon import build_vocabulary

    base = Tokenizer()
    sources = [base.tokenize(doc.text) for doc in corpus.documents]
    return build_vocabulary(sources, extra_tokens=extra_tokens)


def corpus_digest(corpus: Corpus) -> str:
    h = hashlib.sha256()
    for doc in corpus.documents:
        h.update(
            json.dumps(doc.to_dict(), sort_keys=True, ensure_ascii=False).encode()
        )
        h.update(b"\n")
    return h.hexdigest()


def base_provenance(
    corpus: Corpus, config: TrainingConfig, anonymizer: str | None
) -> dict:
    return {
        "kind": config.model_kind,
        "corpus_hash": corpus_digest(corpus),
        "anonymizer": anonymizer if anonymizer is not None else "unknown",
        "config": config.to_dict(),
        "untrained": False,
        "deterministic_training": True,
    }
