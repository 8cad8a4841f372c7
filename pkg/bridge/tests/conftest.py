import pytest

# The harness package is a test-only dependency: it produces the exported
# model fixtures and provides the in-process comparison side.
kart = pytest.importorskip("kart")

from kart.generate import TemplateConfig  # noqa: E402
from kart.scorer import (  # noqa: E402
    TrainingConfig,
    corpus_vocabulary,
    save_model,
    train_count_scorer,
    train_tiny_mlm,
)


@pytest.fixture(scope="session")
def fixture_data():
    table = kart.generate_phi_table(10, seed=55)
    filled = kart.fill_placeholders(
        kart.synthesize_documents(table, TemplateConfig(docs_per_patient=4), seed=56),
        table,
        1.0,
        seed=57,
    )
    lexicon = kart.default_name_lexicon()
    tokenizer = corpus_vocabulary(
        filled, extra_tokens=tuple(lexicon.first) + tuple(lexicon.last)
    )
    return {
        "table": table,
        "filled": filled,
        "lexicon": lexicon,
        "tokenizer": tokenizer,
    }


@pytest.fixture(scope="session")
def count_model_dir(fixture_data, tmp_path_factory):
    model = train_count_scorer(
        fixture_data["filled"],
        TrainingConfig(model_kind="count_nb", seed=0),
        fixture_data["tokenizer"],
        anonymizer="id",
    )
    path = tmp_path_factory.mktemp("models") / "count"
    save_model(model, path)
    return path, model


@pytest.fixture(scope="session")
def mlm_model_dir(fixture_data, tmp_path_factory):
    model = train_tiny_mlm(
        fixture_data["filled"],
        TrainingConfig(
            model_kind="tiny_mlm",
            steps=30,
            batch_size=8,
            learning_rate=0.05,
            embedding_dim=16,
            seed=2,
        ),
        fixture_data["tokenizer"],
        anonymizer="id",
    )
    path = tmp_path_factory.mktemp("models") / "mlm"
    save_model(model, path)
    return path, model
