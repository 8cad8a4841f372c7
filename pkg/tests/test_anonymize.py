import pytest

from kart.anonymize import AnonymizationOp, apply_anonymizer, scan_for_phi
from kart.errors import ValidationError
from kart.hipaa import HIPAA_CATEGORIES
from kart.records import PhiRecord, PhiTable
from kart.spans import Corpus, Document


def test_op_kind_invariants():
    assert AnonymizationOp.identity().masked_categories == frozenset()
    assert AnonymizationOp.hipaa().masked_categories == frozenset(HIPAA_CATEGORIES)
    with pytest.raises(ValidationError):
        AnonymizationOp(kind="id", masked_categories=frozenset({"name"}))
    with pytest.raises(ValidationError):
        AnonymizationOp(kind="hipaa", masked_categories=frozenset({"name"}))
    with pytest.raises(ValidationError):
        AnonymizationOp.custom(["bogus"])


def test_parse_accepts_scenario_forms():
    assert AnonymizationOp.parse("id").kind == "id"
    assert AnonymizationOp.parse("hipaa").kind == "hipaa"
    op = AnonymizationOp.parse({"custom": ["name", "phone"]})
    assert op.masked_categories == frozenset({"name", "phone"})


def test_identity_is_byte_identical(small_world):
    out = apply_anonymizer(small_world["filled"], AnonymizationOp.identity())
    for a, b in zip(out.documents, small_world["filled"].documents):
        assert a.text == b.text


def test_hipaa_leaves_no_scannable_phi(small_world):
    anon = apply_anonymizer(small_world["filled"], AnonymizationOp.hipaa())
    assert scan_for_phi(anon, small_world["table"]) == []


def test_custom_masking_only_names_keeps_phones(small_world):
    op = AnonymizationOp.custom(["name"])
    out = apply_anonymizer(small_world["filled"], op)
    table = small_world["table"]
    assert scan_for_phi(out, table, categories={"name"}) == []
    phone_hits = scan_for_phi(out, table, categories={"phone"})
    assert phone_hits, "phone surrogates must still be present in text"


def test_idempotence(small_world):
    op = AnonymizationOp.hipaa()
    once = apply_anonymizer(small_world["filled"], op)
    twice = apply_anonymizer(once, op)
    assert [d.text for d in twice.documents] == [d.text for d in once.documents]
    assert twice.documents == once.documents


def test_monotonicity_of_masking(small_world):
    """Enlarging the masked set never increases the number of scan hits."""
    table = small_world["table"]
    subsets = [
        frozenset(),
        frozenset({"name"}),
        frozenset({"name", "phone"}),
        frozenset({"name", "phone", "date", "email"}),
        frozenset(HIPAA_CATEGORIES),
    ]
    last = None
    for cats in subsets:
        if not cats:
            op = AnonymizationOp.identity()
        elif cats == frozenset(HIPAA_CATEGORIES):
            op = AnonymizationOp.hipaa()
        else:
            op = AnonymizationOp.custom(cats)
        hits = len(scan_for_phi(apply_anonymizer(small_world["filled"], op), table))
        if last is not None:
            assert hits <= last
        last = hits


def test_scan_finds_constructed_positive():
    table = PhiTable(
        rows=[
            PhiRecord(patient_id=0, first_name="john", last_name="smith", age=40)
        ]
    )
    doc = Document(
        doc_id="d",
        patient_id=0,
        category="progress_note",
        text="seen today: john smith doing well",
        phi_spans=(),
    )
    hits = scan_for_phi(Corpus(documents=(doc,)), table, categories={"name"})
    full = [h for h in hits if h.value == "john smith"]
    assert len(full) == 1
    assert full[0].offset == 12


def test_scan_empty_on_placeholder_corpus(small_world):
    assert scan_for_phi(small_world["synthesized"], small_world["table"]) == []


def test_scan_results_sorted(small_world):
    hits = scan_for_phi(small_world["filled"], small_world["table"])
    keys = [(h.doc_id, h.offset, h.category, h.patient_id) for h in hits]
    assert keys == sorted(keys)


def test_scan_is_case_insensitive():
    table = PhiTable(
        rows=[PhiRecord(patient_id=0, first_name="john", last_name="smith", age=40)]
    )
    doc = Document(
        doc_id="d",
        patient_id=0,
        category="progress_note",
        text="Patient JOHN SMITH was admitted",
        phi_spans=(),
    )
    hits = scan_for_phi(Corpus(documents=(doc,)), table, categories={"name"})
    assert any(h.value == "john smith" for h in hits)
