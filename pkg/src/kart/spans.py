"""Documents with byte-offset PHI span annotations.

Spans index into the UTF-8 encoding of the document text. All harness text
is ASCII in practice, but offsets are defined over bytes so externally
ingested corpora with multi-byte characters stay consistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import ValidationError
from .hipaa import VALID_SPAN_CATEGORIES


@dataclass(frozen=True)
class PhiSpan:
    start: int
    end: int
    category: str
    patient_id: int
    surrogate: str | None = None

    def to_dict(self) -> dict:
        d = {
            "start": self.start,
            "end": self.end,
            "category": self.category,
            "patient_id": self.patient_id,
        }
        if self.surrogate is not None:
            d["surrogate"] = self.surrogate
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PhiSpan":
        return cls(
            start=int(d["start"]),
            end=int(d["end"]),
            category=d["category"],
            patient_id=int(d["patient_id"]),
            surrogate=d.get("surrogate"),
        )


@dataclass(frozen=True)
class Document:
    doc_id: str
    patient_id: int
    category: str
    text: str
    phi_spans: tuple[PhiSpan, ...] = ()

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "patient_id": self.patient_id,
            "category": self.category,
            "text": self.text,
            "phi_spans": [s.to_dict() for s in self.phi_spans],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Document":
        return cls(
            doc_id=str(d["doc_id"]),
            patient_id=int(d["patient_id"]),
            category=d["category"],
            text=d["text"],
            phi_spans=tuple(PhiSpan.from_dict(s) for s in d.get("phi_spans", [])),
        )


@dataclass(frozen=True)
class Provenance:
    seed: int | None = None
    generator_version: str | None = None
    fill_rate: float | None = None

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "generator_version": self.generator_version,
            "fill_rate": self.fill_rate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Provenance":
        return cls(
            seed=d.get("seed"),
            generator_version=d.get("generator_version"),
            fill_rate=d.get("fill_rate"),
        )


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]
    split: str = "train"
    provenance: Provenance = field(default_factory=Provenance)

    def __post_init__(self):
        if self.split not in ("train", "val"):
            raise ValidationError(f"unknown split {self.split!r}")

    def __len__(self) -> int:
        return len(self.documents)

    def doc(self, doc_id: str) -> Document:
        for d in self.documents:
            if d.doc_id == doc_id:
                return d
        raise KeyError(doc_id)


def validate_document(doc: Document, known_patients: set[int] | None = None) -> None:
    """Check every span invariant; raise ValidationError naming the doc."""
    n = len(doc.text.encode("utf-8"))
    prev_end = 0
    raw = doc.text.encode("utf-8")
    for span in doc.phi_spans:
        where = f"doc {doc.doc_id!r} span at {span.start}"
        if not (0 <= span.start < span.end <= n):
            raise ValidationError(
                f"{where}: offsets [{span.start}, {span.end}) out of range for length {n}"
            )
        if span.start < prev_end:
            raise ValidationError(f"{where}: spans overlap or are unsorted")
        prev_end = span.end
        if span.category not in VALID_SPAN_CATEGORIES:
            raise ValidationError(f"{where}: unknown category {span.category!r}")
        try:
            got = raw[span.start:span.end].decode("utf-8")
        except UnicodeDecodeError as e:
            raise ValidationError(
                f"{where}: offsets split a multi-byte character"
            ) from e
        if span.surrogate is not None and got != span.surrogate:
            raise ValidationError(
                f"{where}: text {got!r} does not match surrogate {span.surrogate!r}"
            )
        if known_patients is not None and span.patient_id not in known_patients:
            raise ValidationError(f"{where}: unknown patient_id {span.patient_id}")


def validate_corpus(corpus: Corpus, known_patients: set[int] | None = None) -> None:
    seen: set[str] = set()
    for doc in corpus.documents:
        if doc.doc_id in seen:
            raise ValidationError(f"duplicate doc_id {doc.doc_id!r}")
        seen.add(doc.doc_id)
        from .hipaa import NOTE_CATEGORY_SET

        if doc.category not in NOTE_CATEGORY_SET:
            raise ValidationError(
                f"doc {doc.doc_id!r}: unknown note category {doc.category!r}"
            )
        validate_document(doc, known_patients)
        if known_patients is not None and doc.patient_id not in known_patients:
            raise ValidationError(
                f"doc {doc.doc_id!r}: unknown patient_id {doc.patient_id}"
            )


def rewrite_spans(
    doc: Document,
    replacements: dict[int, tuple[str, str | None]],
) -> Document:
    """Replace selected spans and shift every offset accordingly.

    replacements maps span index -> (new_text, new_surrogate). Untouched
    spans keep their annotation but get recomputed offsets. Works on byte
    offsets throughout so span arithmetic stays exact.
    """
    raw = doc.text.encode("utf-8")
    pieces: list[bytes] = []
    new_spans: list[PhiSpan] = []
    cursor = 0
    out_len = 0
    for i, span in enumerate(doc.phi_spans):
        pieces.append(raw[cursor:span.start])
        out_len += span.start - cursor
        if i in replacements:
            new_text, new_surrogate = replacements[i]
            chunk = new_text.encode("utf-8")
            new_spans.append(
                replace(
                    span,
                    start=out_len,
                    end=out_len + len(chunk),
                    surrogate=new_surrogate,
                )
            )
        else:
            chunk = raw[span.start:span.end]
            new_spans.append(
                replace(span, start=out_len, end=out_len + len(chunk))
            )
        pieces.append(chunk)
        out_len += len(chunk)
        cursor = span.end
    pieces.append(raw[cursor:])
    return replace(
        doc,
        text=b"".join(pieces).decode("utf-8"),
        phi_spans=tuple(new_spans),
    )
