"""Attacks against a trained scorer.

Full-name inversion: find "(first) (last) is a (age) year old (sex)"
mention sites, mask the two name positions, delete every other placeholder
token, and rank the candidate grid by the product of the two normalized
posteriors from one simultaneous-mask query.

Document de-anonymization: for an attacker who knows names (and optionally
sex/age), pick the public document whose masked name site gives the
target's name the highest probability, then read the medical history out
of it.

Association probing: threshold the conditional probability of candidate
identifiers given a condition prompt, with a shadow-corpus calibration
helper for choosing the threshold.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateDistributionError,
    KartError,
)
from .lexicon import (
    CLS_TOKEN,
    MASK_TOKEN,
    SEP_TOKEN,
    NameLexicon,
    Tokenizer,
    is_placeholder,
)
from . import lexdata
from .corpus_io import atomic_write_text
from .records import PhiRecord, PhiTable
from .scorer import FULL_VOCAB, ScorerModel, score_masked
from .scorer.config import TrainingConfig
from .spans import Corpus, Document
from .topk import SortedFactor, exact_rank, top_k

_MALE_WORDS = ("male", "man", "gentleman", "m")
_FEMALE_WORDS = ("female", "woman", "lady", "f")


@dataclass(frozen=True)
class MentionPattern:
    sentence_boundary: str = r"(?<=[.?!])\s+"
    window_sentences: int = 5
    male_words: tuple[str, ...] = _MALE_WORDS
    female_words: tuple[str, ...] = _FEMALE_WORDS

    def sex_word_to_sex(self, word: str) -> str:
        return "male" if word.lower() in self.male_words else "female"

    def after_site_regex(self) -> re.Pattern:
        words = "|".join(self.male_words + self.female_words)
        return re.compile(
            rf"\s+is\s+a\s+(\d+)[\s-]+year[\s-]+old\s+({words})\b",
            re.IGNORECASE,
        )


DEFAULT_PATTERN = MentionPattern()


@dataclass(frozen=True)
class FullNameMention:
    mention_id: str
    doc_id: str
    patient_id: int
    tokens: tuple[str, ...]
    first_pos: int
    last_pos: int
    gold_first: str
    gold_last: str
    age: int
    sex: str

    def to_dict(self) -> dict:
        return {
            "mention_id": self.mention_id,
            "doc_id": self.doc_id,
            "patient_id": self.patient_id,
            "tokens": list(self.tokens),
            "first_pos": self.first_pos,
            "last_pos": self.last_pos,
            "gold_first": self.gold_first,
            "gold_last": self.gold_last,
            "age": self.age,
            "sex": self.sex,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FullNameMention":
        return cls(
            mention_id=d["mention_id"],
            doc_id=d["doc_id"],
            patient_id=int(d["patient_id"]),
            tokens=tuple(d["tokens"]),
            first_pos=int(d["first_pos"]),
            last_pos=int(d["last_pos"]),
            gold_first=d["gold_first"],
            gold_last=d["gold_last"],
            age=int(d["age"]),
            sex=d["sex"],
        )


@dataclass(frozen=True)
class CandidateRanking:
    mention_id: str
    entries: tuple[tuple[str, str, float], ...]
    gold_rank: int
    unnormalized_mass: float = float("nan")

    def to_dict(self) -> dict:
        mass = self.unnormalized_mass
        return {
            "mention_id": self.mention_id,
            "entries": [[f, l, p] for f, l, p in self.entries],
            "gold_rank": self.gold_rank,
            # null on the wire when absent; bare NaN is not strict JSON
            "unnormalized_mass": None if math.isnan(mass) else mass,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CandidateRanking":
        mass = d.get("unnormalized_mass")
        return cls(
            mention_id=d["mention_id"],
            entries=tuple((e[0], e[1], float(e[2])) for e in d["entries"]),
            gold_rank=int(d["gold_rank"]),
            unnormalized_mass=float("nan") if mass is None else float(mass),
        )


def _byte_to_char_map(text: str) -> dict[int, int]:
    """Byte offset -> char offset for span boundaries (identity for ASCII)."""
    mapping = {0: 0}
    b = 0
    for i, ch in enumerate(text):
        b += len(ch.encode("utf-8"))
        mapping[b] = i + 1
    return mapping


def _sentence_ranges(text: str, pattern: MentionPattern) -> list[tuple[int, int]]:
    boundaries = [m.end() for m in re.finditer(pattern.sentence_boundary, text)]
    starts = [0] + boundaries
    ends = boundaries + [len(text)]
    return [(s, e) for s, e in zip(starts, ends) if s < e]


def extract_full_name_mentions(
    corpus: Corpus,
    pattern: MentionPattern = DEFAULT_PATTERN,
    phi_table: PhiTable | None = None,
    keep_unresolved_gold: bool = False,
) -> list[FullNameMention]:
    """One mention per matching name site.

    Works on both filled corpora (name spans carry surrogates: gold comes
    from the span) and masked corpora (gold resolved through phi_table when
    given). Sites whose gold names cannot be resolved are dropped unless
    keep_unresolved_gold is set, in which case they carry empty gold fields.
    """
    after_re = pattern.after_site_regex()
    mentions: list[FullNameMention] = []
    for doc in corpus.documents:
        text = doc.text
        b2c = _byte_to_char_map(text)
        name_spans = [
            (i, s) for i, s in enumerate(doc.phi_spans) if s.category == "name"
        ]
        sentences = None
        span_char = {
            idx: (b2c[s.start], b2c[s.end])
            for idx, s in enumerate(doc.phi_spans)
        }
        for (i1, s1), (i2, s2) in zip(name_spans, name_spans[1:]):
            # A name pair is two name spans separated by exactly one space
            # (an intervening span would show up in the gap text).
            gap = text[b2c[s1.end]:b2c[s2.start]]
            if gap != " ":
                continue
            m = after_re.match(text, b2c[s2.end])
            if m is None:
                continue
            age = int(m.group(1))
            sex = pattern.sex_word_to_sex(m.group(2))
            if sentences is None:
                sentences = _sentence_ranges(text, pattern)
            site_start = b2c[s1.start]
            k = next(
                (
                    idx
                    for idx, (a, b) in enumerate(sentences)
                    if a <= site_start < b
                ),
                None,
            )
            if k is None:
                continue
            window = sentences[k : k + pattern.window_sentences]
            w_start, w_end = window[0][0], window[-1][1]

            gold_first = (s1.surrogate or "").lower()
            gold_last = (s2.surrogate or "").lower()
            if phi_table is not None and (not gold_first or not gold_last):
                try:
                    record = phi_table.record(s1.patient_id)
                    gold_first = gold_first or record.first_name.lower()
                    gold_last = gold_last or record.last_name.lower()
                except (IndexError, KartError):
                    pass
            if (not gold_first or not gold_last) and not keep_unresolved_gold:
                continue

            tokens: list[str] = [CLS_TOKEN]
            first_pos = last_pos = -1
            for tok, ts, te in Tokenizer().tokenize_spans(text[w_start:w_end]):
                abs_s, abs_e = ts + w_start, te + w_start
                owner = None
                for idx, (cs, ce) in span_char.items():
                    if cs <= abs_s and abs_e <= ce:
                        owner = idx
                        break
                if owner == i1:
                    first_pos = len(tokens)
                    tokens.append(MASK_TOKEN)
                elif owner == i2:
                    last_pos = len(tokens)
                    tokens.append(MASK_TOKEN)
                elif is_placeholder(tok):
                    continue
                else:
                    tokens.append(tok)
            tokens.append(SEP_TOKEN)
            if first_pos < 0 or last_pos < 0:
                continue
            mentions.append(
                FullNameMention(
                    mention_id=f"{doc.doc_id}:{s1.start:08d}",
                    doc_id=doc.doc_id,
                    patient_id=s1.patient_id,
                    tokens=tuple(tokens),
                    first_pos=first_pos,
                    last_pos=last_pos,
                    gold_first=gold_first,
                    gold_last=gold_last,
                    age=age,
                    sex=sex,
                )
            )
    mentions.sort(key=lambda m: m.mention_id)
    return mentions


def select_targeted_mentions(
    mentions: list[FullNameMention],
    lexicon: NameLexicon,
    seed: int,
) -> list[FullNameMention]:
    """Keep in-grid mentions, then one seeded-uniform pick per patient."""
    first_set = set(lexicon.first)
    last_set = set(lexicon.last)
    by_patient: dict[int, list[FullNameMention]] = {}
    for m in sorted(mentions, key=lambda m: m.mention_id):
        if m.gold_first in first_set and m.gold_last in last_set:
            by_patient.setdefault(m.patient_id, []).append(m)
    targeted = []
    for pid in sorted(by_patient):
        group = by_patient[pid]
        rng = np.random.default_rng(np.random.SeedSequence([seed, pid]))
        targeted.append(group[int(rng.integers(0, len(group)))])
    targeted.sort(key=lambda m: m.mention_id)
    return targeted


@dataclass(frozen=True)
class MentionScores:
    """Vocabulary-normalized log-probs for the name candidates, plus the
    total in-lexicon probability mass at each mask."""

    first_logp: dict[str, float]
    last_logp: dict[str, float]
    first_mass: float
    last_mass: float


def score_mention(
    model: ScorerModel, mention: FullNameMention, lexicon: NameLexicon
) -> MentionScores:
    result = score_masked(
        model,
        list(mention.tokens),
        (mention.first_pos, mention.last_pos),
        {mention.first_pos: FULL_VOCAB, mention.last_pos: FULL_VOCAB},
    )
    first_all = result[mention.first_pos]
    last_all = result[mention.last_pos]
    first_logp = {u: first_all[u] for u in lexicon.first}
    last_logp = {v: last_all[v] for v in lexicon.last}
    first_mass = float(sum(math.exp(lp) for lp in first_logp.values()))
    last_mass = float(sum(math.exp(lp) for lp in last_logp.values()))
    return MentionScores(
        first_logp=first_logp,
        last_logp=last_logp,
        first_mass=first_mass,
        last_mass=last_mass,
    )


def _normalize(logp: dict[str, float], label: str) -> dict[str, float]:
    values = np.array(list(logp.values()), dtype=np.float64)
    if not len(values) or np.all(np.isneginf(values)):
        raise DegenerateDistributionError(
            f"all candidate probabilities are zero for {label}"
        )
    m = float(np.max(values))
    exp = np.exp(values - m)
    exp /= exp.sum()
    return dict(zip(logp.keys(), exp.tolist()))


def compute_name_posteriors(
    model: ScorerModel,
    mention: FullNameMention,
    lexicon: NameLexicon,
) -> tuple[dict[str, float], dict[str, float]]:
    """Candidate-normalized first/last name posteriors (one masked query)."""
    scores = score_mention(model, mention, lexicon)
    return (
        _normalize(scores.first_logp, f"first names of {mention.mention_id}"),
        _normalize(scores.last_logp, f"last names of {mention.mention_id}"),
    )


def rank_candidates_topk(
    first_dist: dict[str, float],
    last_dist: dict[str, float],
    k: int,
    gold: tuple[str, str],
    mention_id: str = "",
    unnormalized_mass: float = float("nan"),
) -> CandidateRanking:
    """Joint = product of marginals; best-first top-k plus exact gold rank."""
    if k < 1:
        raise ConfigurationError("k must be >= 1")
    gold_first, gold_last = gold
    if gold_first not in first_dist or gold_last not in last_dist:
        raise KartError(f"gold pair {gold!r} is outside the candidate grid")
    first = SortedFactor.from_mapping(first_dist)
    last = SortedFactor.from_mapping(last_dist)
    entries = tuple(
        (u, v, float(p)) for p, u, v in top_k(first, last, k)
    )
    return CandidateRanking(
        mention_id=mention_id,
        entries=entries,
        gold_rank=exact_rank(first, last, gold_first, gold_last),
        unnormalized_mass=unnormalized_mass,
    )


@dataclass
class InversionOutput:
    mentions: list[FullNameMention]
    rankings: list[CandidateRanking]
    posteriors: list[tuple[dict[str, float], dict[str, float]]]


def invert_names(
    model: ScorerModel,
    corpus: Corpus,
    lexicon: NameLexicon,
    seed: int,
    phi_table: PhiTable | None = None,
    top_k_entries: int = 100,
    pattern: MentionPattern = DEFAULT_PATTERN,
) -> InversionOutput:
    """The full inversion pipeline: extract, target, score, rank."""
    mentions = extract_full_name_mentions(corpus, pattern, phi_table=phi_table)
    targeted = select_targeted_mentions(mentions, lexicon, seed)
    rankings = []
    posteriors = []
    for mention in targeted:
        scores = score_mention(model, mention, lexicon)
        first = _normalize(scores.first_logp, mention.mention_id)
        last = _normalize(scores.last_logp, mention.mention_id)
        posteriors.append((first, last))
        rankings.append(
            rank_candidates_topk(
                first,
                last,
                top_k_entries,
                (mention.gold_first, mention.gold_last),
                mention_id=mention.mention_id,
                unnormalized_mass=scores.first_mass * scores.last_mass,
            )
        )
    return InversionOutput(
        mentions=targeted, rankings=rankings, posteriors=posteriors
    )


@dataclass
class DeanonymizationOutput:
    table: PhiTable
    assignments: dict[int, str | None]
    unresolved: list[int] = field(default_factory=list)


def deanonymize_documents(
    model: ScorerModel,
    public_corpus: Corpus,
    knowledge: PhiTable,
    lexicon: NameLexicon,
    pattern: MentionPattern = DEFAULT_PATTERN,
    conditions: tuple[str, ...] = lexdata.CONDITIONS,
) -> DeanonymizationOutput:
    """Assign each known name to its most probable public document and read
    the past medical history out of the chosen document.

    Knowledge attributes act as hard filters (sex always when present, age
    when positive); the scorer only ranks the surviving candidates.
    """
    if knowledge.role != "attacker_estimate":
        raise ConfigurationError(
            "knowledge table must have role attacker_estimate"
        )
    mentions = extract_full_name_mentions(
        public_corpus, pattern, keep_unresolved_gold=True
    )
    docs_by_id = {d.doc_id: d for d in public_corpus.documents}

    mention_scores: dict[str, MentionScores] = {}
    for m in mentions:
        mention_scores[m.mention_id] = score_mention(model, m, lexicon)

    out_rows = []
    assignments: dict[int, str | None] = {}
    unresolved: list[int] = []
    for row in knowledge.rows:
        target_first = row.first_name.lower()
        target_last = row.last_name.lower()
        candidates = [
            m
            for m in mentions
            if (not row.sex or m.sex == row.sex)
            and (row.age <= 0 or m.age == row.age)
        ]
        best: tuple[float, str] | None = None
        for m in candidates:
            scores = mention_scores[m.mention_id]
            if target_first not in scores.first_logp or target_last not in scores.last_logp:
                continue
            lp = scores.first_logp[target_first] + scores.last_logp[target_last]
            key = (-lp, m.doc_id)
            if best is None or key < best:
                best = key
        new_row = replace_pmh(row, [])
        if best is None:
            assignments[row.patient_id] = None
            unresolved.append(row.patient_id)
        else:
            doc_id = best[1]
            assignments[row.patient_id] = doc_id
            new_row = replace_pmh(row, extract_conditions(docs_by_id[doc_id], conditions))
        out_rows.append(new_row)
    return DeanonymizationOutput(
        table=PhiTable(rows=out_rows, role="attacker_estimate"),
        assignments=assignments,
        unresolved=unresolved,
    )


def replace_pmh(row: PhiRecord, pmh: list[str]) -> PhiRecord:
    d = row.to_dict()
    d["pmh"] = pmh
    return PhiRecord.from_dict(d)


def extract_conditions(
    doc: Document, conditions: tuple[str, ...] = lexdata.CONDITIONS
) -> list[str]:
    """Condition-lexicon strings present in the document text, sorted."""
    text = doc.text.lower()
    return sorted({c for c in conditions if c in text})


def association_attack(
    model: ScorerModel,
    condition: str,
    target_category: str,
    candidates: list[str],
    p0: float,
    prompt: str = "diagnosis {condition} contact [mask] .",
) -> list[tuple[str, float]]:
    """Candidates whose conditional probability clears the p0 threshold.

    Probabilities are normalized over the supplied candidate list; results
    are sorted by probability descending, identifier ascending.
    """
    if not candidates:
        raise ConfigurationError("candidate list must be non-empty")
    if p0 < 0:
        raise ConfigurationError("p0 must be >= 0")
    if target_category not in {"phone", "identifier", *_identifier_categories()}:
        raise ConfigurationError(f"unknown target category {target_category!r}")
    for cand in candidates:
        toks = model.tokenizer.tokenize(cand)
        if len(toks) != 1:
            raise ConfigurationError(
                f"candidate {cand!r} is not a single token"
            )
    filled = prompt.format(condition=condition)
    tokens = [CLS_TOKEN] + model.tokenizer.tokenize(filled) + [SEP_TOKEN]
    if MASK_TOKEN not in tokens:
        raise ConfigurationError("prompt template must contain [mask]")
    pos = tokens.index(MASK_TOKEN)
    result = score_masked(
        model, tokens, (pos,), {pos: [c.lower() for c in candidates]}
    )
    probs = _normalize(result[pos], f"candidates given {condition!r}")
    kept = [(ident, p) for ident, p in probs.items() if p >= p0]
    kept.sort(key=lambda ip: (-ip[1], ip[0]))
    return kept


def _identifier_categories():
    from .hipaa import HIPAA_CATEGORIES

    return HIPAA_CATEGORIES


@dataclass
class ShadowCalibration:
    p0: float
    metrics: dict[float, dict[str, float]]
    model_provenance: dict


def shadow_calibrate(
    shadow_corpus: Corpus,
    shadow_gold: PhiTable,
    attack_family: str,
    grid: list[float],
    config: TrainingConfig,
    tokenizer=None,
) -> ShadowCalibration:
    """Train a shadow scorer and pick the threshold maximizing micro-F1 of
    the association attack against the shadow gold (ties -> smaller p0)."""
    if not grid:
        raise ConfigurationError("threshold grid must be non-empty")
    if attack_family != "association":
        raise ConfigurationError(
            f"unsupported attack family {attack_family!r}"
        )
    from .scorer import train_count_scorer, train_tiny_mlm

    if config.model_kind == "count_nb":
        shadow_model = train_count_scorer(shadow_corpus, config, tokenizer)
    elif config.model_kind == "tiny_mlm":
        shadow_model = train_tiny_mlm(shadow_corpus, config, tokenizer)
    else:
        raise ConfigurationError(
            f"cannot train shadow model of kind {config.model_kind!r}"
        )

    conditions = sorted({c for row in shadow_gold.rows for c in row.pmh})
    phones = sorted({row.phone for row in shadow_gold.rows if row.phone})
    gold_pairs = {
        (c, row.phone)
        for row in shadow_gold.rows
        for c in row.pmh
        if row.phone
    }
    metrics: dict[float, dict[str, float]] = {}
    for p0 in sorted(set(float(g) for g in grid)):
        tp = fp = 0
        predicted_pairs = set()
        for condition in conditions:
            hits = association_attack(
                shadow_model, condition, "phone", phones, p0
            )
            for ident, _ in hits:
                predicted_pairs.add((condition, ident))
        tp = len(predicted_pairs & gold_pairs)
        fp = len(predicted_pairs - gold_pairs)
        fn = len(gold_pairs - predicted_pairs)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (
            2 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        )
        metrics[p0] = {"precision": precision, "recall": recall, "f1": f1}
    best_p0 = min(metrics, key=lambda p: (-metrics[p]["f1"], p))
    return ShadowCalibration(
        p0=best_p0,
        metrics=metrics,
        model_provenance=dict(shadow_model.provenance),
    )


def save_mentions(mentions: list[FullNameMention], path) -> None:
    atomic_write_text(
        path,
        "\n".join(json.dumps(m.to_dict(), sort_keys=True) for m in mentions)
        + "\n",
    )


def load_mentions(path) -> list[FullNameMention]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(FullNameMention.from_dict(json.loads(line)))
    return out


def save_rankings(rankings: list[CandidateRanking], path) -> None:
    atomic_write_text(
        path,
        "\n".join(json.dumps(r.to_dict(), sort_keys=True) for r in rankings)
        + "\n",
    )


def load_rankings(path) -> list[CandidateRanking]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(CandidateRanking.from_dict(json.loads(line)))
    return out
