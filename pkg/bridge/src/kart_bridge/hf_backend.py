"""Fill-mask transformer backend.

Wraps any Hugging Face masked-LM checkpoint behind the wire protocol. The
protocol's token conventions are lowercase ([mask], [cls], [sep], [unk]),
so special tokens are exposed lowercased and mapped back to the model's own
names on the way in; WordPiece-style vocabularies are otherwise served
verbatim.
"""

from __future__ import annotations

import numpy as np

from .scoring import Backend, RequestError


class TransformerBackend(Backend):
    def __init__(self, model_name: str, tokenizer=None, model=None):
        import torch
        from transformers import AutoModelForMaskedLM, AutoTokenizer

        self._torch = torch
        self.tokenizer = tokenizer or AutoTokenizer.from_pretrained(model_name)
        self.model = model or AutoModelForMaskedLM.from_pretrained(model_name)
        self.model.eval()
        self.model_id = f"hf:{model_name}"

        if self.tokenizer.mask_token is None:
            raise ValueError(f"{model_name} does not expose a mask token")
        # harness-facing names: specials lowercased
        specials = set(self.tokenizer.all_special_tokens)
        self._to_model: dict[str, str] = {}
        vocab_items = sorted(
            self.tokenizer.get_vocab().items(), key=lambda kv: kv[1]
        )
        self.vocab = []
        for token, _ in vocab_items:
            public = token.lower() if token in specials else token
            self._to_model[public] = token
            self.vocab.append(public)
        self.mask_token = self.tokenizer.mask_token.lower()

    def _model_tokens(self, tokens: list[str]) -> list[str]:
        unk = self.tokenizer.unk_token
        return [self._to_model.get(t, t if t in self.tokenizer.get_vocab() else unk)
                for t in tokens]

    def log_distributions(self, tokens, positions):
        torch = self._torch
        model_tokens = self._model_tokens(tokens)
        for p in positions:
            model_tokens[p] = self.tokenizer.mask_token
        ids = self.tokenizer.convert_tokens_to_ids(model_tokens)
        with torch.no_grad():
            logits = self.model(input_ids=torch.tensor([ids])).logits[0]
            logp = torch.log_softmax(logits.double(), dim=-1)
        out = {}
        for p in positions:
            out[p] = logp[p].numpy().astype(np.float64)
        return out

    def embeddings(self, tokens):
        matrix = self.model.get_input_embeddings().weight.detach().numpy()
        out = {}
        vocab = self.tokenizer.get_vocab()
        for t in tokens:
            name = self._to_model.get(t, t)
            if name not in vocab:
                raise RequestError(f"unknown token {t!r}")
            out[t] = [float(x) for x in matrix[vocab[name]]]
        return out
