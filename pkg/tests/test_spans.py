import pytest
from hypothesis import given, strategies as st

from kart.errors import ValidationError
from kart.spans import (
    Corpus,
    Document,
    PhiSpan,
    rewrite_spans,
    validate_corpus,
    validate_document,
)


def make_doc(text, spans):
    return Document(
        doc_id="d0",
        patient_id=0,
        category="progress_note",
        text=text,
        phi_spans=tuple(spans),
    )


def test_surrogate_must_match_text():
    doc = make_doc(
        "call 555-0100 now",
        [PhiSpan(5, 13, "phone", 0, surrogate="555-0100")],
    )
    validate_document(doc)
    bad = make_doc(
        "call 555-0100 now",
        [PhiSpan(5, 13, "phone", 0, surrogate="555-9999")],
    )
    with pytest.raises(ValidationError):
        validate_document(bad)


def test_end_before_start_rejected_with_doc_id():
    doc = make_doc("hello", [PhiSpan(3, 2, "phone", 0)])
    with pytest.raises(ValidationError, match="d0"):
        validate_document(doc)


def test_overlapping_spans_rejected():
    doc = make_doc(
        "abcdef",
        [PhiSpan(0, 3, "phone", 0), PhiSpan(2, 5, "phone", 0)],
    )
    with pytest.raises(ValidationError, match="overlap"):
        validate_document(doc)


def test_unknown_category_rejected():
    doc = make_doc("abcdef", [PhiSpan(0, 3, "not-a-category", 0)])
    with pytest.raises(ValidationError, match="category"):
        validate_document(doc)


def test_duplicate_doc_ids_rejected():
    doc = make_doc("x", [])
    with pytest.raises(ValidationError, match="duplicate"):
        validate_corpus(Corpus(documents=(doc, doc)))


def test_rewrite_spans_shifts_offsets():
    doc = make_doc(
        "a [ph-phone] b [ph-name] c",
        [PhiSpan(2, 12, "phone", 0), PhiSpan(15, 24, "name", 0)],
    )
    out = rewrite_spans(doc, {0: ("555-0100", "555-0100")})
    assert out.text == "a 555-0100 b [ph-name] c"
    s0, s1 = out.phi_spans
    assert out.text[s0.start:s0.end] == "555-0100"
    assert s0.surrogate == "555-0100"
    assert out.text[s1.start:s1.end] == "[ph-name]"
    assert s1.surrogate is None
    validate_document(out)


def test_rewrite_spans_handles_multibyte_text():
    text = "café [ph-name] done"
    start = len("café ".encode("utf-8"))
    doc = make_doc(text, [PhiSpan(start, start + 9, "name", 0)])
    validate_document(doc)
    out = rewrite_spans(doc, {0: ("maría", "maría")})
    assert out.text == "café maría done"
    s = out.phi_spans[0]
    assert out.text.encode("utf-8")[s.start:s.end].decode("utf-8") == "maría"
    validate_document(out)


@given(
    values=st.lists(
        st.text(
            alphabet=st.characters(whitelist_categories=("Ll",), max_codepoint=0x2FF),
            min_size=1,
            max_size=8,
        ),
        min_size=1,
        max_size=6,
    ),
    data=st.data(),
)
def test_rewrite_spans_roundtrip_property(values, data):
    parts = []
    spans = []
    offset = 0
    for i, v in enumerate(values):
        lead = f"w{i} "
        parts.append(lead)
        offset += len(lead.encode("utf-8"))
        token = "[ph-name]"
        parts.append(token)
        spans.append(PhiSpan(offset, offset + len(token), "name", 0))
        offset += len(token)
        parts.append(" ")
        offset += 1
    doc = make_doc("".join(parts), spans)
    validate_document(doc)
    chosen = data.draw(
        st.sets(st.integers(min_value=0, max_value=len(values) - 1))
    )
    out = rewrite_spans(
        doc, {i: (values[i], values[i]) for i in chosen}
    )
    validate_document(out)
    for i, span in enumerate(out.phi_spans):
        got = out.text.encode("utf-8")[span.start:span.end].decode("utf-8")
        if i in chosen:
            assert got == values[i] == span.surrogate
        else:
            assert got == "[ph-name]" and span.surrogate is None
