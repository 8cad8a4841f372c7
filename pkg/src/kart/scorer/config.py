"""Training configuration shared by every scorer kind."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ConfigurationError

MODEL_KINDS = ("count_nb", "tiny_mlm", "external")


@dataclass(frozen=True)
class TrainingConfig:
    model_kind: str = "count_nb"
    max_sequence_length: int = 128
    learning_rate: float = 2e-5
    batch_size: int = 64
    steps: int = 100
    seed: int = 0
    embedding_dim: int = 64      # tiny_mlm only
    smoothing_k: float = 0.1     # count_nb only
    tie_embeddings: bool = True  # tiny_mlm only

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ConfigurationError(f"unknown model kind {self.model_kind!r}")
        if self.max_sequence_length <= 0:
            raise ConfigurationError("max_sequence_length must be positive")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.batch_size <= 0:
            raise ConfigurationError("batch_size must be positive")
        if self.steps < 0:
            raise ConfigurationError("steps must be >= 0")
        if self.smoothing_k <= 0:
            raise ConfigurationError("smoothing_k must be positive")
        if self.model_kind == "tiny_mlm" and self.embedding_dim < 2:
            raise ConfigurationError("tiny_mlm requires embedding_dim >= 2")

    def to_dict(self) -> dict:
        return {
            "model_kind": self.model_kind,
            "max_sequence_length": self.max_sequence_length,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "steps": self.steps,
            "seed": self.seed,
            "embedding_dim": self.embedding_dim,
            "smoothing_k": self.smoothing_k,
            "tie_embeddings": self.tie_embeddings,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})
