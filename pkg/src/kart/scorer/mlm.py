"""Small neural masked-token predictor.

Architecture: an embedding table, mean-of-context aggregation, and an output
projection that shares the embedding weights when tie_embeddings is set.
Trained with cross-entropy on randomly masked positions (15% of each
sampled sequence, at least one). Weight tying matters here: tokens that
never appear in the training text still receive gradient through the
softmax denominator, so their embeddings drift away from initialization.

Training is single-threaded float32 numpy and bit-reproducible for a fixed
(corpus, config).
"""

from __future__ import annotations

import numpy as np

from ..errors import TrainingError, UnknownTokenError
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

MASK_RATE = 0.15


class TinyMlmScorer(ScorerModel):
    kind = "tiny_mlm"

    def __init__(
        self,
        tokenizer: Tokenizer,
        max_len: int,
        embeddings: np.ndarray,
        bias: np.ndarray,
        output: np.ndarray | None = None,
        provenance: dict | None = None,
    ):
        super().__init__(tokenizer, provenance)
        self.max_len = int(max_len)
        self.embeddings = embeddings  # (V, d) float32
        self.bias = bias              # (V,) float32
        self.output = output          # None when tied
        self.train_losses: list[float] = []

    @property
    def output_matrix(self) -> np.ndarray:
        return self.embeddings if self.output is None else self.output

    def _context_vector(self, ids: np.ndarray, masked: set[int]) -> np.ndarray:
        ctx = [int(c) for s, c in enumerate(ids) if s not in masked]
        if not ctx:
            return np.zeros(self.embeddings.shape[1], dtype=np.float32)
        return self.embeddings[ctx].mean(axis=0)

    def _log_distributions(self, ids, mask_positions):
        ids = ids[: self.max_len]
        masked = {p for p in mask_positions if p < len(ids)}
        h = self._context_vector(ids, masked)
        logits = self.output_matrix @ h + self.bias
        logp = log_softmax(logits.astype(np.float64))
        return {p: logp for p in mask_positions}

    def export_embeddings(self, tokens: list[str]) -> dict[str, np.ndarray]:
        out = {}
        for token in tokens:
            if not self.tokenizer.has(token):
                raise UnknownTokenError(f"token {token!r} is not in vocabulary")
            out[token] = self.embeddings[self.tokenizer.token_id(token)].copy()
        return out


def init_parameters(
    vocab_size: int, embedding_dim: int, seed: int, tied: bool
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    rng = np.random.default_rng(seed)
    emb = (rng.standard_normal((vocab_size, embedding_dim)) * 0.02).astype(
        np.float32
    )
    bias = np.zeros(vocab_size, dtype=np.float32)
    output = None
    if not tied:
        output = (rng.standard_normal((vocab_size, embedding_dim)) * 0.02).astype(
            np.float32
        )
    return emb, bias, output


def train_tiny_mlm(
    corpus: Corpus,
    config: TrainingConfig,
    tokenizer: Tokenizer | None = None,
    anonymizer: str | None = None,
) -> TinyMlmScorer:
    if config.model_kind != "tiny_mlm":
        raise TrainingError(f"config.model_kind is {config.model_kind!r}")
    if len(corpus.documents) == 0:
        raise TrainingError("cannot train on an empty corpus")
    tok = tokenizer if tokenizer is not None else corpus_vocabulary(corpus)
    v = tok.vocab_size
    d = config.embedding_dim
    unk = tok.token_id("[unk]")

    seqs = [
        np.array([tok.token_id(t) if tok.has(t) else unk for t in seq], dtype=np.int64)
        for seq in training_sequences(corpus, tok, config.max_sequence_length)
    ]
    seqs = [s for s in seqs if len(s) >= 2]
    if not seqs:
        raise TrainingError("corpus has no usable sequences")

    emb, bias, output = init_parameters(v, d, config.seed, config.tie_embeddings)
    provenance = base_provenance(corpus, config, anonymizer)
    provenance["untrained"] = config.steps == 0
    model = TinyMlmScorer(
        tokenizer=tok,
        max_len=config.max_sequence_length,
        embeddings=emb,
        bias=bias,
        output=output,
        provenance=provenance,
    )
    if config.steps == 0:
        return model

    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    lr = np.float32(config.learning_rate)
    out_mat = model.output_matrix
    for _ in range(config.steps):
        picks = rng.integers(0, len(seqs), size=config.batch_size)
        g_emb = np.zeros_like(emb)
        g_bias = np.zeros_like(bias)
        g_out = np.zeros_like(out_mat) if output is not None else None
        total_masked = 0
        total_loss = 0.0
        for si in picks:
            ids = seqs[si]
            n = len(ids)
            mask_flags = rng.random(n) < MASK_RATE
            if not mask_flags.any():
                mask_flags[int(rng.integers(0, n))] = True
            masked_pos = np.flatnonzero(mask_flags)
            ctx_pos = np.flatnonzero(~mask_flags)
            if len(ctx_pos) == 0:
                continue
            ctx_ids = ids[ctx_pos]
            h = emb[ctx_ids].mean(axis=0)
            logits = out_mat @ h + bias
            logits64 = logits.astype(np.float64)
            logp = log_softmax(logits64)
            p = np.exp(logp).astype(np.float32)
            targets = ids[masked_pos]
            total_loss += float(-logp[targets].sum())
            total_masked += len(targets)
            # summed gradient over this sequence's masked positions
            dz = len(targets) * p
            np.subtract.at(dz, targets, 1.0)
            g_bias += dz
            dh = out_mat.T @ dz
            if output is None:
                g_emb += np.outer(dz, h)
            else:
                g_out += np.outer(dz, h)
            scale = np.float32(1.0 / len(ctx_ids))
            np.add.at(g_emb, ctx_ids, (dh * scale).astype(np.float32))
        if total_masked == 0:
            model.train_losses.append(0.0)
            continue
        step_scale = lr / np.float32(total_masked)
        emb -= step_scale * g_emb
        bias -= step_scale * g_bias
        if output is not None:
            output -= step_scale * g_out
        model.train_losses.append(total_loss / total_masked)
    return model
