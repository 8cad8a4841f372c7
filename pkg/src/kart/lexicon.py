"""Name candidate sets and the word-level tokenizer.

The attack ranks full-name candidates over the grid U x V, where U and V are
the first/last names that the active tokenizer encodes as a single token.
Popularity weights come from a shipped Zipf-shaped synthetic table by
default; census-style tables can be ingested from CSV.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from . import lexdata
from .errors import ConfigurationError

log = logging.getLogger("kart.lexicon")

MASK_TOKEN = "[mask]"
CLS_TOKEN = "[cls]"
SEP_TOKEN = "[sep]"
UNK_TOKEN = "[unk]"
SPECIAL_TOKENS = (CLS_TOKEN, SEP_TOKEN, MASK_TOKEN, UNK_TOKEN)

# Bracketed chunks (placeholders, specials) stay whole; sentence punctuation
# becomes its own token; everything else splits on whitespace and dots.
# Matching is case-insensitive on the original text so token offsets stay
# valid; emitted tokens are lowercased afterwards.
_TOKEN_RE = re.compile(r"\[[a-z0-9\-]+\]|[^\s.,:;?!]+|[.,:;?!]", re.IGNORECASE)


@dataclass(frozen=True)
class Tokenizer:
    """Lowercasing word-level tokenizer with an optional frozen vocabulary.

    extra_splits lists characters treated as additional separators, which
    lets tests model subword-ish backends (e.g. splitting on "-").
    """

    vocabulary: tuple[str, ...] = ()
    extra_splits: str = ""
    _ids: dict[str, int] = field(init=False, repr=False, compare=False, hash=False, default=None)

    def __post_init__(self):
        object.__setattr__(
            self, "_ids", {t: i for i, t in enumerate(self.vocabulary)}
        )

    def _prepare(self, text: str) -> str:
        if self.extra_splits:
            for ch in self.extra_splits:
                text = text.replace(ch, " ")
        return text

    def tokenize(self, text: str) -> list[str]:
        return [m.lower() for m in _TOKEN_RE.findall(self._prepare(text))]

    def tokenize_spans(self, text: str) -> list[tuple[str, int, int]]:
        """Lowercased tokens with character offsets into the original text."""
        out = []
        for m in _TOKEN_RE.finditer(self._prepare(text)):
            out.append((m.group(0).lower(), m.start(), m.end()))
        return out

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    def token_id(self, token: str) -> int | None:
        return self._ids.get(token)

    def has(self, token: str) -> bool:
        return token in self._ids


def is_single_token(name: str, tokenizer: Tokenizer) -> bool:
    return len(tokenizer.tokenize(name)) == 1


def is_placeholder(token: str) -> bool:
    return token.startswith("[ph-") and token.endswith("]")


def build_vocabulary(
    token_sources: list[list[str]],
    extra_tokens: tuple[str, ...] = (),
) -> Tokenizer:
    """Frozen vocabulary: specials first, then sorted distinct tokens."""
    seen: set[str] = set()
    for tokens in token_sources:
        seen.update(tokens)
    seen.update(extra_tokens)
    seen.difference_update(SPECIAL_TOKENS)
    vocab = SPECIAL_TOKENS + tuple(sorted(seen))
    return Tokenizer(vocabulary=vocab)


@dataclass(frozen=True)
class NameLexicon:
    first_names: tuple[tuple[str, float], ...]
    last_names: tuple[tuple[str, float], ...]

    @property
    def first(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.first_names)

    @property
    def last(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.last_names)

    @property
    def grid_size(self) -> int:
        return len(self.first_names) * len(self.last_names)

    def contains_pair(self, first: str, last: str) -> bool:
        return first in set(self.first) and last in set(self.last)


def _clean_entries(
    entries: list[tuple[str, float]], tokenizer: Tokenizer, side: str
) -> tuple[tuple[str, float], ...]:
    kept: dict[str, float] = {}
    for name, weight in entries:
        name = name.strip().lower()
        if not name or weight <= 0:
            continue
        if not is_single_token(name, tokenizer):
            continue
        if name in kept:
            kept[name] += weight
        else:
            kept[name] = weight
    if not kept:
        raise ConfigurationError(
            f"no usable {side} names: every entry was empty, non-positive, "
            "or multi-token under the active tokenizer"
        )
    ordered = sorted(kept.items(), key=lambda kv: (-kv[1], kv[0]))
    return tuple(ordered)


def build_name_lexicon(
    first_entries: list[tuple[str, float]],
    last_entries: list[tuple[str, float]],
    tokenizer: Tokenizer | None = None,
) -> NameLexicon:
    """Drop names that are not single tokens; sort by weight desc, then name."""
    tok = tokenizer if tokenizer is not None else Tokenizer()
    lexicon = NameLexicon(
        first_names=_clean_entries(first_entries, tok, "first"),
        last_names=_clean_entries(last_entries, tok, "last"),
    )
    log.info(
        "name lexicon: |U|=%d, |V|=%d, %d full name candidates",
        len(lexicon.first_names),
        len(lexicon.last_names),
        lexicon.grid_size,
    )
    return lexicon


def load_frequency_csv(path: str | Path) -> list[tuple[str, float]]:
    """CSV with a header row: name,weight."""
    entries: list[tuple[str, float]] = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or "name" not in reader.fieldnames:
            raise ConfigurationError(
                f"{path}: expected a CSV header with 'name' and 'weight'"
            )
        for row in reader:
            entries.append((row["name"], float(row["weight"])))
    return entries


def zipf_weights(n: int, exponent: float = 1.07) -> list[float]:
    return [1.0 / (rank + 1) ** exponent for rank in range(n)]


def default_name_lexicon(
    n_first: int | None = None,
    n_last: int | None = None,
    tokenizer: Tokenizer | None = None,
) -> NameLexicon:
    firsts = lexdata.FIRST_NAMES[: n_first or len(lexdata.FIRST_NAMES)]
    lasts = lexdata.LAST_NAMES[: n_last or len(lexdata.LAST_NAMES)]
    return build_name_lexicon(
        list(zip(firsts, zipf_weights(len(firsts)))),
        list(zip(lasts, zipf_weights(len(lasts)))),
        tokenizer,
    )


@dataclass(frozen=True)
class JointDistribution:
    """Product distribution over the name grid, stored by its factors."""

    first_names: tuple[str, ...]
    last_names: tuple[str, ...]
    first_probs: tuple[float, ...]
    last_probs: tuple[float, ...]

    def prob(self, first: str, last: str) -> float:
        i = self.first_names.index(first)
        j = self.last_names.index(last)
        return self.first_probs[i] * self.last_probs[j]

    def first_marginal(self) -> dict[str, float]:
        return dict(zip(self.first_names, self.first_probs))

    def last_marginal(self) -> dict[str, float]:
        return dict(zip(self.last_names, self.last_probs))


def popularity_prior(lexicon: NameLexicon) -> JointDistribution:
    """P(u, v) proportional to weight(u) * weight(v), normalized over the grid."""
    fw = [w for _, w in lexicon.first_names]
    lw = [w for _, w in lexicon.last_names]
    fs, ls = sum(fw), sum(lw)
    return JointDistribution(
        first_names=lexicon.first,
        last_names=lexicon.last,
        first_probs=tuple(w / fs for w in fw),
        last_probs=tuple(w / ls for w in lw),
    )
