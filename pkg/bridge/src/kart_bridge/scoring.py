"""Scoring backends.

Each backend answers the one protocol query: log-probability distributions
over the vocabulary at every masked position, conditioned on the sequence
with all requested positions masked simultaneously.

The exported-model backends reimplement the documented scoring math from
the serialized sufficient statistics:

count_nb   P(w at p | context) ~ prior(w) * prod over context tokens c at
           relative offset d of P((c, d) | w), everything add-k smoothed:
               prior(w)      = (unigram[w] + k) / (total_tokens + k*V)
               P((c, d) | w) = (count[w, c, d] + k)
                               / (total_context[w] + k * V * (2L - 1))
tiny_mlm   logits = output_matrix @ mean(context embeddings) + bias, where
           output_matrix is the embedding table itself when weights are
           tied.
"""

from __future__ import annotations

import math

import numpy as np

from .formats import LoadedModel, ModelFormatError

MASK_TOKEN = "[mask]"
UNK_TOKEN = "[unk]"


class RequestError(Exception):
    """Maps to HTTP 400."""


class Backend:
    model_id: str
    vocab: list[str]
    mask_token: str = MASK_TOKEN

    def log_distributions(
        self, tokens: list[str], positions: list[int]
    ) -> dict[int, np.ndarray]:
        raise NotImplementedError

    def embeddings(self, tokens: list[str]) -> dict[str, list[float]]:
        raise RequestError("unsupported capability: embeddings")


def _log_softmax(scores: np.ndarray) -> np.ndarray:
    m = float(np.max(scores))
    shifted = scores - m
    return shifted - math.log(float(np.sum(np.exp(shifted))))


class CountBackend(Backend):
    def __init__(self, model: LoadedModel):
        self.model_id = model.model_id
        self.vocab = list(model.vocab)
        self._ids = {t: i for i, t in enumerate(self.vocab)}
        v = len(self.vocab)
        self.max_len = int(model.config.get(
            "max_sequence_length", float(model.arrays["scalars"][0])
        ))
        self.k = float(model.config.get(
            "smoothing_k", float(model.arrays["scalars"][1])
        ))
        total_tokens = float(model.arrays["scalars"][2])
        self.n_delta = 2 * self.max_len - 1

        unigram = model.arrays["unigram"].astype(np.float64)
        total_context = model.arrays["total_context"].astype(np.float64)
        self.log_prior = np.log(unigram + self.k) - np.log(
            total_tokens + self.k * v
        )
        self.log_denom = np.log(
            total_context + self.k * float(v) * self.n_delta
        )
        # (context token, offset) -> sparse counts over target tokens
        self.counts: dict[tuple[int, int], dict[int, float]] = {}
        w_arr = model.arrays["feature_w"].astype(np.int64)
        c_arr = model.arrays["feature_c"].astype(np.int64)
        d_arr = model.arrays["feature_delta"].astype(np.int64)
        n_arr = model.arrays["feature_count"].astype(np.float64)
        for w, c, d, n in zip(w_arr, c_arr, d_arr, n_arr):
            delta = int(d) - (self.max_len - 1)
            self.counts.setdefault((int(c), delta), {})[int(w)] = float(n)

    def _encode(self, tokens: list[str]) -> list[int]:
        unk = self._ids.get(UNK_TOKEN)
        out = []
        for t in tokens:
            if t in self._ids:
                out.append(self._ids[t])
            elif unk is not None:
                out.append(unk)
            else:
                raise RequestError(f"unknown token {t!r} and no [unk] entry")
        return out

    def log_distributions(self, tokens, positions):
        ids = self._encode(tokens)
        masked = set(positions)
        v = len(self.vocab)
        out = {}
        for p in positions:
            scores = self.log_prior.copy()
            for s, c in enumerate(ids):
                if s in masked:
                    continue
                delta = s - p
                if abs(delta) > self.max_len - 1:
                    continue
                cvec = np.zeros(v)
                for w, n in self.counts.get((c, delta), {}).items():
                    cvec[w] = n
                scores += np.log(cvec + self.k) - self.log_denom
            out[p] = _log_softmax(scores)
        return out


class TinyMlmBackend(Backend):
    def __init__(self, model: LoadedModel):
        self.model_id = model.model_id
        self.vocab = list(model.vocab)
        self._ids = {t: i for i, t in enumerate(self.vocab)}
        self.max_len = int(model.arrays["scalars"][0])
        self.emb = model.arrays["embeddings"]
        self.bias = model.arrays["bias"]
        self.out = model.arrays.get("output", self.emb)

    def log_distributions(self, tokens, positions):
        unk = self._ids.get(UNK_TOKEN)
        ids = [self._ids.get(t, unk) for t in tokens][: self.max_len]
        if any(i is None for i in ids):
            raise RequestError("unknown token and no [unk] entry")
        masked = {p for p in positions if p < len(ids)}
        ctx = [i for s, i in enumerate(ids) if s not in masked]
        if ctx:
            h = self.emb[ctx].mean(axis=0)
        else:
            h = np.zeros(self.emb.shape[1], dtype=np.float32)
        logits = self.out @ h + self.bias
        logp = _log_softmax(logits.astype(np.float64))
        return {p: logp for p in positions}

    def embeddings(self, tokens):
        out = {}
        for t in tokens:
            if t not in self._ids:
                raise RequestError(f"unknown token {t!r}")
            out[t] = [float(x) for x in self.emb[self._ids[t]]]
        return out


def backend_for(model: LoadedModel) -> Backend:
    if model.kind == "count_nb":
        return CountBackend(model)
    if model.kind == "tiny_mlm":
        return TinyMlmBackend(model)
    raise ModelFormatError(f"no backend for kind {model.kind!r}")
