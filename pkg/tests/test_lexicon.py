import pytest

from kart import lexdata
from kart.errors import ConfigurationError
from kart.lexicon import (
    Tokenizer,
    build_name_lexicon,
    is_single_token,
    load_frequency_csv,
    popularity_prior,
    zipf_weights,
)


def test_tokenizer_basics():
    tok = Tokenizer()
    assert tok.tokenize("Alice Smith is a 30 year old Female.") == [
        "alice", "smith", "is", "a", "30", "year", "old", "female", ".",
    ]
    assert tok.tokenize("[ph-first-name] x [PH-PHONE]") == [
        "[ph-first-name]", "x", "[ph-phone]",
    ]
    assert tok.tokenize("call 555-0100, ok?") == ["call", "555-0100", ",", "ok", "?"]


def test_is_single_token():
    tok = Tokenizer()
    assert is_single_token("smith", tok)
    assert not is_single_token("", tok)
    assert not is_single_token("mary anne", tok)
    assert is_single_token("anne-marie", tok)
    splitter = Tokenizer(extra_splits="-")
    assert not is_single_token("anne-marie", splitter)


def test_build_lexicon_drops_multi_token_names():
    lex = build_name_lexicon(
        [("anna", 3.0), ("anne-marie", 2.0), ("zoe", 1.0)],
        [("smith", 2.0), ("o neil", 1.0)],
        Tokenizer(extra_splits="-"),
    )
    assert lex.first == ("anna", "zoe")
    assert lex.last == ("smith",)


def test_build_lexicon_rejects_empty_result():
    with pytest.raises(ConfigurationError):
        build_name_lexicon([("mary anne", 1.0)], [("smith", 1.0)])


def test_lexicon_sorted_by_weight_then_name():
    lex = build_name_lexicon(
        [("b", 2.0), ("a", 2.0), ("c", 5.0)],
        [("x", 1.0)],
    )
    assert lex.first == ("c", "a", "b")


def test_grid_size_arithmetic():
    lex = build_name_lexicon(
        [("a", 1.0), ("b", 1.0), ("c", 1.0)],
        [("x", 1.0), ("y", 1.0)],
    )
    assert lex.grid_size == 6


def test_every_default_name_is_single_token(lexicon):
    tok = Tokenizer()
    for name in lexicon.first + lexicon.last:
        assert is_single_token(name, tok)


def test_popularity_prior_normalizes(lexicon):
    prior = popularity_prior(lexicon)
    total = sum(prior.first_probs) * sum(prior.last_probs)
    assert abs(total - 1.0) <= 1e-12
    grid_total = sum(
        pu * pv for pu in prior.first_probs for pv in prior.last_probs
    )
    assert abs(grid_total - 1.0) <= 1e-12


def test_popularity_prior_single_candidate():
    lex = build_name_lexicon([("a", 3.0)], [("x", 9.0)])
    prior = popularity_prior(lex)
    assert prior.prob("a", "x") == 1.0


def test_popularity_prior_uniform_six_grid():
    lex = build_name_lexicon(
        [("a", 1.0), ("b", 1.0), ("c", 1.0)],
        [("x", 1.0), ("y", 1.0)],
    )
    prior = popularity_prior(lex)
    for u in "abc":
        for v in "xy":
            assert abs(prior.prob(u, v) - 1 / 6) <= 1e-12


def test_prior_argmax_is_most_popular_pair(lexicon):
    prior = popularity_prior(lexicon)
    best = max(
        ((u, v) for u in prior.first_names for v in prior.last_names),
        key=lambda uv: prior.prob(*uv),
    )
    assert best == (lexicon.first[0], lexicon.last[0])


def test_zipf_weights_decrease():
    w = zipf_weights(10)
    assert all(a > b for a, b in zip(w, w[1:]))


def test_frequency_csv_roundtrip(tmp_path):
    path = tmp_path / "names.csv"
    path.write_text("name,weight\nmary,10\njohn,8\n")
    entries = load_frequency_csv(path)
    assert entries == [("mary", 10.0), ("john", 8.0)]
    with pytest.raises(ConfigurationError):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        load_frequency_csv(bad)


def test_name_lexicon_hygiene_for_scan_oracle():
    """No name may hide inside any word that can appear unmasked in
    generated text; otherwise the exact-substring scanner would report
    false PHI hits on fully masked corpora."""
    scaffold = (
        "past medical history includes current medications include "
        "diagnosis contact resides at admitted discharged phone fax email "
        "ssn medical record number insurance beneficiary account license "
        "vehicle device portal login ip voice sample chart photo seen at "
        "is a year old male female"
    ).split()
    unmasked = set(scaffold)
    for sentences in lexdata.NARRATIVE.values():
        for s in sentences:
            unmasked.update(s.split())
    for c in lexdata.CONDITIONS:
        unmasked.update(c.split())
    for m in lexdata.MEDICATIONS:
        unmasked.update(m.split())
    # Values of other categories stay in text under partial masking, so
    # names must not hide inside them either.
    for h in lexdata.HOSPITALS:
        unmasked.update(h.split())
    unmasked.update(lexdata.STREETS)
    unmasked.update(lexdata.CITIES)
    names = set(lexdata.FIRST_NAMES) | set(lexdata.LAST_NAMES)
    offenders = [
        (name, word)
        for name in names
        for word in unmasked
        if name in word
    ]
    assert offenders == []
