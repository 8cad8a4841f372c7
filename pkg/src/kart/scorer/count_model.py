"""Position-aware naive-Bayes masked-token scorer.

P(w at masked position | context) is proportional to

    prior(w) * prod over context tokens c at relative offset d of
    P((c, d) | w)

with add-k smoothing on both factors. Counts come from every position of
every training sequence, so a name that always co-occurs with its mention
context is memorized, which is exactly the leakage phenomenon the harness
probes. An untrained instance (zero counts) is the uniform scorer.
"""

from __future__ import annotations

import numpy as np

from ..errors import TrainingError
from ..lexicon import Tokenizer
from ..spans import Corpus
from .base import (
    ScorerModel,
    base_provenance,
    corpus_vocabulary,
    log_softmax,
    training_sequences,
)
from .config import TrainingConfig


class CountScorer(ScorerModel):
    kind = "count_nb"

    def __init__(
        self,
        tokenizer: Tokenizer,
        max_len: int,
        smoothing_k: float,
        feature_keys: np.ndarray,
        feature_counts: np.ndarray,
        unigram: np.ndarray,
        total_context: np.ndarray,
        total_tokens: float,
        provenance: dict | None = None,
    ):
        super().__init__(tokenizer, provenance)
        self.max_len = int(max_len)
        self.smoothing_k = float(smoothing_k)
        self.feature_keys = feature_keys          # sorted int64
        self.feature_counts = feature_counts      # float64, same length
        self.unigram = unigram                    # (V,)
        self.total_context = total_context        # (V,)
        self.total_tokens = float(total_tokens)
        v = self.tokenizer.vocab_size
        self.n_delta = 2 * self.max_len - 1
        self._log_prior = np.log(self.unigram + self.smoothing_k) - np.log(
            self.total_tokens + self.smoothing_k * v
        )
        feature_space = float(v) * self.n_delta
        self._log_denom = np.log(
            self.total_context + self.smoothing_k * feature_space
        )

    def _key_base(self, c: int, delta: int) -> np.ndarray:
        v = self.tokenizer.vocab_size
        w = np.arange(v, dtype=np.int64)
        return (w * v + c) * self.n_delta + (delta + self.max_len - 1)

    def _feature_log_likelihood(self, c: int, delta: int) -> np.ndarray:
        keys = self._key_base(c, delta)
        idx = np.searchsorted(self.feature_keys, keys)
        idx_clipped = np.minimum(idx, len(self.feature_keys) - 1)
        if len(self.feature_keys):
            found = self.feature_keys[idx_clipped] == keys
            counts = np.where(found, self.feature_counts[idx_clipped], 0.0)
        else:
            counts = np.zeros(len(keys))
        return np.log(counts + self.smoothing_k) - self._log_denom

    def _log_distributions(self, ids, mask_positions):
        masked = set(mask_positions)
        # Offsets differ per masked position, so accumulate per position;
        # positions share nothing except the prior.
        out = {}
        for p in mask_positions:
            scores = self._log_prior.copy()
            for s, c in enumerate(ids):
                if s in masked:
                    continue
                delta = s - p
                if abs(delta) > self.max_len - 1:
                    continue
                scores += self._feature_log_likelihood(int(c), delta)
            out[p] = log_softmax(scores)
        return out


def train_count_scorer(
    corpus: Corpus,
    config: TrainingConfig,
    tokenizer: Tokenizer | None = None,
    anonymizer: str | None = None,
) -> CountScorer:
    """Accumulate (target token, context token, offset) counts over the corpus."""
    if config.model_kind != "count_nb":
        raise TrainingError(f"config.model_kind is {config.model_kind!r}")
    if len(corpus.documents) == 0:
        raise TrainingError("cannot train on an empty corpus")
    tok = tokenizer if tokenizer is not None else corpus_vocabulary(corpus)
    v = tok.vocab_size
    max_len = config.max_sequence_length
    n_delta = 2 * max_len - 1
    unk = tok.token_id("[unk]")

    unigram = np.zeros(v, dtype=np.float64)
    total_context = np.zeros(v, dtype=np.float64)
    total_tokens = 0.0
    key_chunks: list[np.ndarray] = []
    for seq in training_sequences(corpus, tok, max_len):
        ids = np.array(
            [tok.token_id(t) if tok.has(t) else unk for t in seq],
            dtype=np.int64,
        )
        n = len(ids)
        if n == 0:
            continue
        counts = np.bincount(ids, minlength=v)
        unigram += counts
        total_tokens += n
        if n == 1:
            continue
        total_context += counts * (n - 1)
        t_idx = np.repeat(np.arange(n), n)
        s_idx = np.tile(np.arange(n), n)
        keep = t_idx != s_idx
        w = ids[t_idx[keep]]
        c = ids[s_idx[keep]]
        delta = s_idx[keep] - t_idx[keep]
        key_chunks.append((w * v + c) * n_delta + (delta + max_len - 1))

    if key_chunks:
        all_keys = np.concatenate(key_chunks)
        feature_keys, feature_counts = np.unique(all_keys, return_counts=True)
        feature_counts = feature_counts.astype(np.float64)
    else:
        feature_keys = np.zeros(0, dtype=np.int64)
        feature_counts = np.zeros(0, dtype=np.float64)

    return CountScorer(
        tokenizer=tok,
        max_len=max_len,
        smoothing_k=config.smoothing_k,
        feature_keys=feature_keys,
        feature_counts=feature_counts,
        unigram=unigram,
        total_context=total_context,
        total_tokens=total_tokens,
        provenance=base_provenance(corpus, config, anonymizer),
    )


def uniform_scorer(tokenizer: Tokenizer) -> CountScorer:
    """Zero-count instance: every full-vocab distribution is exactly uniform."""
    v = tokenizer.vocab_size
    return CountScorer(
        tokenizer=tokenizer,
        max_len=128,
        smoothing_k=1.0,
        feature_keys=np.zeros(0, dtype=np.int64),
        feature_counts=np.zeros(0, dtype=np.float64),
        unigram=np.zeros(v, dtype=np.float64),
        total_context=np.zeros(v, dtype=np.float64),
        total_tokens=0.0,
        provenance={
            "kind": "count_nb",
            "corpus_hash": "",
            "anonymizer": "none",
            "config": TrainingConfig(
                model_kind="count_nb", smoothing_k=1.0
            ).to_dict(),
            "untrained": True,
            "deterministic_training": True,
        },
    )
