from .base import (
    FULL_VOCAB,
    ScorerModel,
    corpus_digest,
    corpus_vocabulary,
    score_masked,
    training_sequences,
)
from .config import TrainingConfig
from .count_model import CountScorer, train_count_scorer, uniform_scorer
from .external import RemoteScorer, external_scorer_connect
from .mlm import TinyMlmScorer, init_parameters, train_tiny_mlm
from .store import load_model, save_model

__all__ = [
    "FULL_VOCAB",
    "CountScorer",
    "RemoteScorer",
    "ScorerModel",
    "TinyMlmScorer",
    "TrainingConfig",
    "corpus_digest",
    "corpus_vocabulary",
    "external_scorer_connect",
    "init_parameters",
    "load_model",
    "save_model",
    "score_masked",
    "train_count_scorer",
    "train_tiny_mlm",
    "training_sequences",
    "uniform_scorer",
]
