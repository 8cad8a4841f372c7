"""Anonymization operators and the completeness scanner.

An operator masks every surrogate span in the selected categories with a
category-tagged placeholder (e.g. "[ph-name]"), leaving span annotations in
place. scan_for_phi is the independent oracle: it searches documents for the
literal gold attribute strings, so a complete masking pass yields zero hits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigurationError, ValidationError
from .hipaa import (
    HIPAA_CATEGORIES,
    HIPAA_CATEGORY_SET,
    SLOT_CATEGORIES,
    mask_placeholder_token,
)
from .records import PhiTable
from .spans import Corpus, rewrite_spans


@dataclass(frozen=True)
class AnonymizationOp:
    kind: str
    masked_categories: frozenset[str] = frozenset()
    mask_token_prefix: str = "[ph-"

    def __post_init__(self):
        if self.kind == "id":
            if self.masked_categories:
                raise ValidationError("kind=id must mask no categories")
        elif self.kind == "hipaa":
            if self.masked_categories != HIPAA_CATEGORY_SET:
                raise ValidationError("kind=hipaa must mask all 18 categories")
        elif self.kind == "custom":
            unknown = self.masked_categories - HIPAA_CATEGORY_SET
            if unknown:
                raise ValidationError(
                    f"custom op names unknown categories: {sorted(unknown)}"
                )
        else:
            raise ValidationError(f"unknown anonymizer kind {self.kind!r}")

    @classmethod
    def identity(cls) -> "AnonymizationOp":
        return cls(kind="id")

    @classmethod
    def hipaa(cls) -> "AnonymizationOp":
        return cls(kind="hipaa", masked_categories=HIPAA_CATEGORY_SET)

    @classmethod
    def custom(cls, categories) -> "AnonymizationOp":
        return cls(kind="custom", masked_categories=frozenset(categories))

    @classmethod
    def parse(cls, value) -> "AnonymizationOp":
        """Accepts "id" | "hipaa" | {"custom": [...]} (scenario TOML form)."""
        if value == "id":
            return cls.identity()
        if value == "hipaa":
            return cls.hipaa()
        if isinstance(value, dict) and set(value) == {"custom"}:
            return cls.custom(value["custom"])
        raise ConfigurationError(f"cannot parse anonymizer spec {value!r}")

    def describe(self) -> str:
        if self.kind == "custom":
            return "custom:" + ",".join(sorted(self.masked_categories))
        return self.kind


def apply_anonymizer(corpus: Corpus, op: AnonymizationOp) -> Corpus:
    """Mask filled surrogates in the selected categories; id is a no-op."""
    if op.kind == "id":
        return corpus
    new_docs = []
    for doc in corpus.documents:
        replacements: dict[int, tuple[str, str | None]] = {}
        for i, span in enumerate(doc.phi_spans):
            if span.surrogate is None:
                continue
            if span.category in op.masked_categories:
                replacements[i] = (mask_placeholder_token(span.category), None)
        new_docs.append(rewrite_spans(doc, replacements) if replacements else doc)
    return Corpus(
        documents=tuple(new_docs),
        split=corpus.split,
        provenance=corpus.provenance,
    )


@dataclass(frozen=True)
class PhiHit:
    doc_id: str
    offset: int
    category: str
    patient_id: int
    value: str = field(compare=False)


def _attribute_strings(table: PhiTable, categories: frozenset[str]):
    """Yield (category, patient_id, value) for every scannable attribute."""
    for row in table.rows:
        per_cat: dict[str, list[str]] = {
            "name": [row.first_name, row.last_name, row.full_name],
            "geographic_subdivision": [row.address],
            "date": list(row.dates),
            "phone": [row.phone],
            "email": [row.email],
            "url": [row.url],
            "ip_address": [row.ip],
            "mrn": [row.mrn],
        }
        for slot, value in row.other_ids.items():
            cat = SLOT_CATEGORIES.get(slot, "other_unique_id")
            per_cat.setdefault(cat, []).append(value)
        for cat, values in per_cat.items():
            if cat not in categories:
                continue
            for value in values:
                if value:
                    yield cat, row.patient_id, value


def scan_for_phi(
    corpus: Corpus,
    phi_table: PhiTable,
    categories=None,
) -> list[PhiHit]:
    """Case-insensitive exact-substring search for gold attribute strings.

    Returns every hit sorted by (doc_id, offset, category, patient_id).
    Surrogates are machine generated, so exact matching is a sound
    completeness oracle for this harness's corpora.
    """
    if phi_table.role != "gold":
        raise ConfigurationError("scan requires the gold table")
    cats = frozenset(categories) if categories is not None else frozenset(HIPAA_CATEGORIES)
    unknown = cats - HIPAA_CATEGORY_SET
    if unknown:
        raise ConfigurationError(f"unknown categories: {sorted(unknown)}")
    needles = list(_attribute_strings(phi_table, cats))
    hits: list[PhiHit] = []
    for doc in corpus.documents:
        haystack = doc.text.lower()
        for cat, pid, value in needles:
            needle = value.lower()
            start = haystack.find(needle)
            while start != -1:
                hits.append(
                    PhiHit(
                        doc_id=doc.doc_id,
                        offset=start,
                        category=cat,
                        patient_id=pid,
                        value=value,
                    )
                )
                start = haystack.find(needle, start + 1)
    hits.sort(key=lambda h: (h.doc_id, h.offset, h.category, h.patient_id))
    return hits
