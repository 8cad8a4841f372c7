import pytest

import kart
from kart.anonymize import AnonymizationOp
from kart.generate import TemplateConfig
from kart.scorer import TrainingConfig, corpus_vocabulary, train_count_scorer


@pytest.fixture(scope="session")
def lexicon():
    return kart.default_name_lexicon()


@pytest.fixture(scope="session")
def small_world(lexicon):
    """20 patients x 5 documents, fully filled, with public (hipaa) view."""
    table = kart.generate_phi_table(20, seed=42)
    synthesized = kart.synthesize_documents(
        table, TemplateConfig(docs_per_patient=5), seed=1
    )
    filled = kart.fill_placeholders(synthesized, table, 1.0, seed=9)
    public = kart.apply_anonymizer(filled, AnonymizationOp.hipaa())
    tokenizer = corpus_vocabulary(
        filled, extra_tokens=tuple(lexicon.first) + tuple(lexicon.last)
    )
    return {
        "table": table,
        "synthesized": synthesized,
        "filled": filled,
        "public": public,
        "tokenizer": tokenizer,
    }


@pytest.fixture(scope="session")
def small_models(small_world):
    cfg = TrainingConfig(model_kind="count_nb", seed=0)
    tok = small_world["tokenizer"]
    model_id = train_count_scorer(
        small_world["filled"], cfg, tok, anonymizer="id"
    )
    hipaa_corpus = kart.apply_anonymizer(
        small_world["filled"], AnonymizationOp.hipaa()
    )
    model_hipaa = train_count_scorer(
        hipaa_corpus, cfg, tok, anonymizer="hipaa"
    )
    return {"id": model_id, "hipaa": model_hipaa}


@pytest.fixture(scope="session")
def fixture_world(lexicon):
    """The shipped 100-patient / 1,000-document evaluation fixture."""
    table = kart.generate_phi_table(100, seed=2024)
    synthesized = kart.synthesize_documents(
        table, TemplateConfig(docs_per_patient=10, mention_fraction=1.0), seed=11
    )
    filled = kart.fill_placeholders(synthesized, table, 1.0, seed=12)
    public = kart.apply_anonymizer(filled, AnonymizationOp.hipaa())
    tokenizer = corpus_vocabulary(
        filled, extra_tokens=tuple(lexicon.first) + tuple(lexicon.last)
    )
    return {
        "table": table,
        "synthesized": synthesized,
        "filled": filled,
        "public": public,
        "tokenizer": tokenizer,
    }
