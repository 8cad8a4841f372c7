"""Synthetic corpus construction.

The pipeline mirrors a de-identified hospital dump being refilled with dummy
identifiers: generate_phi_table invents the patients, synthesize_documents
writes notes with placeholder tokens at every PHI site, fill_placeholders
substitutes each patient's surrogate values at a configurable rate, and
select_subset carves train/val corpora.

Every step is a pure function of (inputs, seed). Per-patient values are
seeded per (table seed, patient, slot) and per-document filling is seeded
per (fill seed, doc), so parallel generation cannot reorder results.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import lexdata
from .errors import ConfigurationError, DataIntegrityError, SizeError, TemplateError
from .hipaa import (
    MEDICALLY_DENSE_CATEGORIES,
    NOTE_CATEGORIES,
    SLOT_CATEGORIES,
    placeholder_token,
    slot_for_placeholder,
)
from .lexicon import NameLexicon, default_name_lexicon
from .records import PhiRecord, PhiTable, slot_value
from .spans import Corpus, Document, PhiSpan, Provenance, rewrite_spans

GENERATOR_VERSION = "kart-gen-1"

# Slot indices keep per-(patient, slot) seed streams disjoint.
_SLOT_INDEX = {slot: i for i, slot in enumerate(sorted(SLOT_CATEGORIES))}
_EXTRA_STREAMS = {"age": 100, "sex": 101, "pmh": 102, "medications": 103,
                  "dates": 104, "ip": 105, "docs": 106}


def _rng(*entropy: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(list(entropy)))


def _doc_stream(seed: int, doc_id: str) -> np.random.Generator:
    digest = hashlib.sha256(doc_id.encode("utf-8")).digest()
    return _rng(seed, int.from_bytes(digest[:8], "little"))


def _affine_coeffs(seed: int, stream: int, modulus: int) -> tuple[int, int]:
    """Multiplier coprime to the modulus, plus an offset."""
    rng = _rng(seed, stream, 77)
    while True:
        a = int(rng.integers(1, modulus))
        if np.gcd(a, modulus) == 1:
            break
    return a, int(rng.integers(0, modulus))


def _weighted_order(
    pairs: list[tuple[str, str]], weights: np.ndarray, seed: int
) -> list[tuple[str, str]]:
    """Weighted order without replacement (exponential-race keys)."""
    rng = _rng(seed, 7001)
    keys = rng.exponential(1.0, size=len(pairs)) / weights
    return [pairs[i] for i in np.argsort(keys, kind="stable")]


def generate_phi_table(
    n_patients: int,
    seed: int,
    lexicon: NameLexicon | None = None,
    conditions: tuple[str, ...] = lexdata.CONDITIONS,
    medications: tuple[str, ...] = lexdata.MEDICATIONS,
) -> PhiTable:
    """Gold patient table with every identifier category populated.

    Full names are drawn by popularity without replacement while the grid
    lasts, so small fixtures get collision-free names.
    """
    if n_patients < 0:
        raise ConfigurationError("n_patients must be >= 0")
    if n_patients == 0:
        return PhiTable(rows=[], role="gold")
    lexicon = lexicon if lexicon is not None else default_name_lexicon()
    if not lexicon.first_names or not lexicon.last_names:
        raise ConfigurationError("name lexicon is empty")
    if not conditions or not medications:
        raise ConfigurationError("condition/medication lexicons are empty")

    pairs = [(f, l) for f, _ in lexicon.first_names for l, _ in lexicon.last_names]
    weights = np.array(
        [fw * lw for _, fw in lexicon.first_names for _, lw in lexicon.last_names]
    )
    ordered = _weighted_order(pairs, weights, seed)

    phone_a, phone_b = _affine_coeffs(seed, 1, 10_000)
    fax_a, fax_b = _affine_coeffs(seed, 2, 10_000)
    mrn_a, mrn_b = _affine_coeffs(seed, 3, 10_000_000)
    ssn_a, ssn_b = _affine_coeffs(seed, 4, 10_000)
    serial_a, serial_b = _affine_coeffs(seed, 5, 100_000)

    rows = []
    for pid in range(n_patients):
        first, last = ordered[pid % len(ordered)]
        age = int(_rng(seed, pid, _EXTRA_STREAMS["age"]).integers(18, 90))
        sex = ("male", "female")[int(_rng(seed, pid, _EXTRA_STREAMS["sex"]).integers(0, 2))]

        rng_dates = _rng(seed, pid, _EXTRA_STREAMS["dates"])
        base = np.datetime64("2008-01-01") + np.timedelta64(
            int(rng_dates.integers(0, 4000)), "D"
        )
        later = base + np.timedelta64(int(rng_dates.integers(1, 60)), "D")
        dates = [str(base), str(later)]

        rng_pmh = _rng(seed, pid, _EXTRA_STREAMS["pmh"])
        n_cond = int(rng_pmh.integers(2, 5))
        pmh = [conditions[i] for i in rng_pmh.permutation(len(conditions))[:n_cond]]
        rng_med = _rng(seed, pid, _EXTRA_STREAMS["medications"])
        n_med = int(rng_med.integers(2, 5))
        meds = [medications[i] for i in rng_med.permutation(len(medications))[:n_med]]

        rng_addr = _rng(seed, pid, _SLOT_INDEX["address"])
        street = lexdata.STREETS[int(rng_addr.integers(0, len(lexdata.STREETS)))]
        city = lexdata.CITIES[int(rng_addr.integers(0, len(lexdata.CITIES)))]
        address = f"{int(rng_addr.integers(100, 1000))} {street} street , {city}"

        rng_hosp = _rng(seed, pid, _SLOT_INDEX["hospital"])
        hospital = lexdata.HOSPITALS[int(rng_hosp.integers(0, len(lexdata.HOSPITALS)))]

        rng_ip = _rng(seed, pid, _EXTRA_STREAMS["ip"])
        ip = "10.{}.{}.{}".format(
            int(rng_ip.integers(0, 256)),
            int(rng_ip.integers(0, 256)),
            int(rng_ip.integers(1, 255)),
        )
        serial = (serial_a * pid + serial_b) % 100_000

        rows.append(
            PhiRecord(
                patient_id=pid,
                first_name=first,
                last_name=last,
                age=age,
                sex=sex,
                phone="555-{:04d}".format((phone_a * pid + phone_b) % 10_000),
                address=address,
                dates=dates,
                mrn="{:08d}".format(20_000_000 + (mrn_a * pid + mrn_b) % 10_000_000),
                email=f"patient{pid}@examplemail.org",
                url=f"portal.examplehealth.org/chart/{pid}",
                ip=ip,
                other_ids={
                    "fax": "556-{:04d}".format((fax_a * pid + fax_b) % 10_000),
                    "ssn": "900-77-{:04d}".format((ssn_a * pid + ssn_b) % 10_000),
                    "health_plan_beneficiary_number": f"hpb-{100_000 + serial}",
                    "account_number": f"acct-{200_000 + serial}",
                    "certificate_license_number": f"lic-{300_000 + serial}",
                    "vehicle_id": f"veh-{400_000 + serial}",
                    "device_id": f"dev-{500_000 + serial}",
                    "biometric_id": f"voice-{pid}-{serial}.wav",
                    "photo_id": f"face-{pid}-{serial}.jpg",
                    "hospital": hospital,
                },
                pmh=pmh,
                medications=meds,
            )
        )
    return PhiTable(rows=rows, role="gold")


@dataclass(frozen=True)
class TemplateConfig:
    docs_per_patient: int | tuple[int, int] = 10
    mention_fraction: float = 1.0
    narrative_sentences: int = 3
    note_categories: tuple[str, ...] = NOTE_CATEGORIES


@dataclass(frozen=True)
class GeneratorConfig:
    """Parsed form of the generator TOML: [templates], [fill], [sizes], seed."""

    seed: int
    n_patients: int
    templates: TemplateConfig
    fill_rate: float
    subset_mode: str | None = None
    train_size: int | None = None
    val_size: int | None = None


def load_generator_config(path: str | Path) -> GeneratorConfig:
    with open(path, "rb") as f:
        data = tomllib.load(f)
    if "seed" not in data:
        raise ConfigurationError(f"{path}: generator config requires a seed")
    templates = data.get("templates", {})
    docs = templates.get("docs_per_patient", 10)
    if isinstance(docs, list):
        docs = (int(docs[0]), int(docs[1]))
    sizes = data.get("sizes", {})
    return GeneratorConfig(
        seed=int(data["seed"]),
        n_patients=int(sizes.get("patients", data.get("patients", 0))),
        templates=TemplateConfig(
            docs_per_patient=docs,
            mention_fraction=float(templates.get("mention_fraction", 1.0)),
            narrative_sentences=int(templates.get("narrative_sentences", 3)),
        ),
        fill_rate=float(data.get("fill", {}).get("rate", 0.723)),
        subset_mode=sizes.get("subset"),
        train_size=int(sizes["train"]) if "train" in sizes else None,
        val_size=int(sizes["val"]) if "val" in sizes else None,
    )


class _DocBuilder:
    """Accumulates sentences, tracking placeholder spans by byte offset."""

    def __init__(self, patient_id: int):
        self.parts: list[str] = []
        self.length = 0
        self.spans: list[PhiSpan] = []
        self.patient_id = patient_id

    def _append(self, text: str) -> None:
        self.parts.append(text)
        self.length += len(text.encode("utf-8"))

    def sentence(self, *chunks: str) -> None:
        # A chunk is either literal text or a slot reference "<slot>".
        for chunk in chunks:
            if self.parts:
                self._append(" ")
            if chunk.startswith("<") and chunk.endswith(">"):
                slot = chunk[1:-1]
                if slot not in SLOT_CATEGORIES:
                    raise TemplateError(f"template references unknown slot {slot!r}")
                token = placeholder_token(slot)
                start = self.length
                self._append(token)
                self.spans.append(
                    PhiSpan(
                        start=start,
                        end=self.length,
                        category=SLOT_CATEGORIES[slot],
                        patient_id=self.patient_id,
                        surrogate=None,
                    )
                )
            else:
                self._append(chunk)
        self._append(" .")

    def build(self, doc_id: str, category: str) -> Document:
        return Document(
            doc_id=doc_id,
            patient_id=self.patient_id,
            category=category,
            text="".join(self.parts),
            phi_spans=tuple(self.spans),
        )


def _compose_document(
    doc_id: str,
    category: str,
    record: PhiRecord,
    with_mention: bool,
    narrative_rng: np.random.Generator,
    n_narrative: int,
) -> Document:
    b = _DocBuilder(record.patient_id)
    if with_mention:
        b.sentence(
            "<first_name>", "<last_name>",
            f"is a {record.age} year old {record.sex}",
        )
    b.sentence("past medical history includes " + " , ".join(record.pmh))
    b.sentence("current medications include " + " , ".join(record.medications))
    for condition in record.pmh:
        b.sentence(f"diagnosis {condition} contact", "<phone>")
    b.sentence("resides at", "<address>")
    b.sentence("admitted", "<date_0>", "discharged", "<date_1>")
    b.sentence("contact phone", "<phone>")
    b.sentence("fax", "<fax>")
    b.sentence("email", "<email>")
    b.sentence("ssn", "<ssn>")
    b.sentence("medical record number", "<mrn>")
    b.sentence("insurance beneficiary", "<health_plan_beneficiary_number>")
    b.sentence("account", "<account_number>")
    b.sentence("license", "<certificate_license_number>")
    b.sentence("vehicle", "<vehicle_id>")
    b.sentence("device", "<device_id>")
    b.sentence("portal", "<url>")
    b.sentence("login ip", "<ip_address>")
    b.sentence("voice sample", "<biometric_id>")
    b.sentence("chart photo", "<photo_id>")
    b.sentence("seen at", "<hospital>")
    pool = lexdata.NARRATIVE[category]
    picks = narrative_rng.permutation(len(pool))[: max(0, n_narrative)]
    for i in picks:
        b.sentence(pool[i])
    return b.build(doc_id, category)


def synthesize_documents(
    phi_table: PhiTable,
    template_config: TemplateConfig | None = None,
    seed: int = 0,
) -> Corpus:
    """Notes with placeholder tokens at every PHI site (surrogates absent)."""
    if phi_table.role != "gold":
        raise ConfigurationError("document synthesis requires a gold table")
    cfg = template_config if template_config is not None else TemplateConfig()
    docs: list[Document] = []
    for record in phi_table.rows:
        rng = _rng(seed, record.patient_id, _EXTRA_STREAMS["docs"])
        if isinstance(cfg.docs_per_patient, tuple):
            lo, hi = cfg.docs_per_patient
            n_docs = int(rng.integers(lo, hi + 1))
        else:
            n_docs = int(cfg.docs_per_patient)
        for j in range(n_docs):
            if j == 0:
                category = "discharge_summary"
            elif j == 1:
                category = "progress_note"
            else:
                category = cfg.note_categories[
                    int(rng.integers(0, len(cfg.note_categories)))
                ]
            if category not in lexdata.NARRATIVE:
                raise ConfigurationError(f"unknown note category {category!r}")
            with_mention = bool(rng.random() < cfg.mention_fraction)
            docs.append(
                _compose_document(
                    doc_id=f"d{record.patient_id:05d}-{j:02d}",
                    category=category,
                    record=record,
                    with_mention=with_mention,
                    narrative_rng=rng,
                    n_narrative=cfg.narrative_sentences,
                )
            )
    return Corpus(
        documents=tuple(docs),
        split="train",
        provenance=Provenance(seed=seed, generator_version=GENERATOR_VERSION),
    )


def _fill_one(doc, phi_table, fill_rate, seed, known):
    rng = _doc_stream(seed, doc.doc_id)
    replacements: dict[int, tuple[str, str | None]] = {}
    for i, span in enumerate(doc.phi_spans):
        if span.surrogate is not None:
            continue
        if span.patient_id not in known:
            raise DataIntegrityError(
                f"doc {doc.doc_id!r}: span references unknown patient "
                f"{span.patient_id}"
            )
        take = bool(rng.random() < fill_rate)
        if not take:
            continue
        text = doc.text[span.start:span.end]
        slot = slot_for_placeholder(text, span.category)
        if slot is None:
            raise TemplateError(
                f"doc {doc.doc_id!r}: no generator or attribute for "
                f"placeholder {text!r} of category {span.category!r}"
            )
        value = slot_value(phi_table.record(span.patient_id), slot)
        replacements[i] = (value, value)
    return rewrite_spans(doc, replacements) if replacements else doc


def fill_placeholders(
    corpus: Corpus,
    phi_table: PhiTable,
    fill_rate: float,
    seed: int,
    threads: int = 1,
) -> Corpus:
    """Independently replace each placeholder with its surrogate value.

    Each replacement happens with probability fill_rate using a per-document
    seed stream, so results are identical for any thread count or document
    order; surviving placeholders keep their spans untouched.
    """
    if not (0.0 <= fill_rate <= 1.0):
        raise ConfigurationError(f"fill_rate {fill_rate} outside [0, 1]")
    if threads < 1:
        raise ConfigurationError("threads must be >= 1")
    known = phi_table.patient_ids()
    if threads == 1:
        new_docs = [
            _fill_one(doc, phi_table, fill_rate, seed, known)
            for doc in corpus.documents
        ]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            new_docs = list(
                pool.map(
                    lambda d: _fill_one(d, phi_table, fill_rate, seed, known),
                    corpus.documents,
                )
            )
    return Corpus(
        documents=tuple(new_docs),
        split=corpus.split,
        provenance=replace(corpus.provenance, fill_rate=fill_rate),
    )


def select_subset(
    corpus: Corpus,
    mode: str,
    sizes: tuple[int, int],
    seed: int,
) -> tuple[Corpus, Corpus]:
    """Disjoint train/val corpora; small_like keeps only the dense notes."""
    if mode not in ("large_like", "small_like"):
        raise ConfigurationError(f"unknown subset mode {mode!r}")
    train_n, val_n = sizes
    if train_n < 0 or val_n < 0:
        raise ConfigurationError("subset sizes must be >= 0")
    if mode == "small_like":
        pool = [d for d in corpus.documents
                if d.category in MEDICALLY_DENSE_CATEGORIES]
    else:
        pool = list(corpus.documents)
    if train_n + val_n > len(pool):
        raise SizeError(
            f"requested {train_n}+{val_n} documents, only {len(pool)} "
            f"available after {mode} filtering"
        )
    order = _rng(seed, 4242).permutation(len(pool))
    chosen_train = sorted(order[:train_n])
    chosen_val = sorted(order[train_n:train_n + val_n])
    train = Corpus(
        documents=tuple(pool[i] for i in chosen_train),
        split="train",
        provenance=corpus.provenance,
    )
    val = Corpus(
        documents=tuple(pool[i] for i in chosen_val),
        split="val",
        provenance=corpus.provenance,
    )
    return train, val
