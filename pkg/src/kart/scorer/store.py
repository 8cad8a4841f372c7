"""Model directory persistence.

Layout:
    manifest.toml  -- kind, provenance, training config
    params.bin     -- named float32 arrays behind the "KARTM\\0" magic
    vocab.txt      -- one token per line, id order

params.bin format (all little-endian):
    magic   6 bytes  b"KARTM\\0"
    version u16      currently 1
    count   u32      number of arrays
    arrays  repeated: name_len u16, name utf-8, ndim u8, dims u32 each,
            float32 payload

Counts are stored as float32, which is exact below 2**24; the writer
refuses anything larger rather than silently rounding.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from ..errors import ConfigurationError, ParseError
from ..lexicon import Tokenizer
from .base import ScorerModel
from .config import TrainingConfig
from .count_model import CountScorer
from .mlm import TinyMlmScorer

MAGIC = b"KARTM\x00"
VERSION = 1
_EXACT_LIMIT = float(2**24)


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_arrays(path: Path, arrays: dict[str, np.ndarray]) -> None:
    chunks = [MAGIC, struct.pack("<HI", VERSION, len(arrays))]
    for name, arr in arrays.items():
        data = np.ascontiguousarray(arr, dtype=np.float64)
        if data.size and float(np.max(np.abs(data))) >= _EXACT_LIMIT:
            raise ConfigurationError(
                f"array {name!r} holds values too large for exact float32"
            )
        payload = data.astype("<f4")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", payload.ndim))
        for dim in payload.shape:
            chunks.append(struct.pack("<I", dim))
        chunks.append(payload.tobytes())
    _atomic_write_bytes(path, b"".join(chunks))


def read_arrays(path: Path) -> dict[str, np.ndarray]:
    blob = path.read_bytes()
    if blob[:6] != MAGIC:
        raise ParseError(f"{path}: bad magic, not a model parameter file")
    version, count = struct.unpack_from("<HI", blob, 6)
    if version != VERSION:
        raise ParseError(f"{path}: unsupported parameter format v{version}")
    offset = 12
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        name = blob[offset:offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<B", blob, offset)
        offset += 1
        shape = []
        for _ in range(ndim):
            (dim,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            shape.append(dim)
        size = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(blob, dtype="<f4", count=size, offset=offset)
        offset += 4 * size
        arrays[name] = arr.reshape(shape).copy()
    return arrays


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        escaped = value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise ConfigurationError(f"cannot serialize {type(value).__name__} to TOML")


def dump_toml(data: dict) -> str:
    """Flat tables only: top-level scalars first, then one [section] level."""
    lines = []
    sections = []
    for key, value in data.items():
        if isinstance(value, dict):
            sections.append((key, value))
        else:
            lines.append(f"{key} = {_toml_value(value)}")
    for name, table in sections:
        lines.append("")
        lines.append(f"[{name}]")
        for key, value in table.items():
            lines.append(f"{key} = {_toml_value(value)}")
    return "\n".join(lines) + "\n"


def save_model(model: ScorerModel, directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "kind": model.kind,
        "schema": VERSION,
        "corpus_hash": model.provenance.get("corpus_hash", ""),
        "anonymizer": model.provenance.get("anonymizer", "unknown"),
        "untrained": bool(model.provenance.get("untrained", False)),
        "deterministic_training": bool(
            model.provenance.get("deterministic_training", True)
        ),
        "config": model.provenance.get(
            "config", TrainingConfig(model_kind=model.kind).to_dict()
        ),
    }
    if isinstance(model, CountScorer):
        keys = model.feature_keys
        v = model.tokenizer.vocab_size
        n_delta = model.n_delta
        w = keys // (v * n_delta)
        c = (keys // n_delta) % v
        d = keys % n_delta
        arrays = {
            "scalars": np.array(
                [model.max_len, model.smoothing_k, model.total_tokens],
                dtype=np.float64,
            ),
            "unigram": model.unigram,
            "total_context": model.total_context,
            "feature_w": w.astype(np.float64),
            "feature_c": c.astype(np.float64),
            "feature_delta": d.astype(np.float64),
            "feature_count": model.feature_counts,
        }
    elif isinstance(model, TinyMlmScorer):
        arrays = {
            "scalars": np.array([model.max_len], dtype=np.float64),
            "embeddings": model.embeddings,
            "bias": model.bias,
        }
        if model.output is not None:
            arrays["output"] = model.output
    else:
        raise ConfigurationError(f"cannot persist scorer kind {model.kind!r}")
    write_arrays(directory / "params.bin", arrays)
    _atomic_write_bytes(
        directory / "vocab.txt",
        ("\n".join(model.tokenizer.vocabulary) + "\n").encode("utf-8"),
    )
    _atomic_write_bytes(
        directory / "manifest.toml", dump_toml(manifest).encode("utf-8")
    )


def load_model(directory: str | Path) -> ScorerModel:
    directory = Path(directory)
    with open(directory / "manifest.toml", "rb") as f:
        manifest = tomllib.load(f)
    vocab = tuple(
        (directory / "vocab.txt").read_text(encoding="utf-8").splitlines()
    )
    tokenizer = Tokenizer(vocabulary=vocab)
    arrays = read_arrays(directory / "params.bin")
    provenance = {
        "kind": manifest["kind"],
        "corpus_hash": manifest.get("corpus_hash", ""),
        "anonymizer": manifest.get("anonymizer", "unknown"),
        "config": manifest.get("config", {}),
        "untrained": manifest.get("untrained", False),
        "deterministic_training": manifest.get("deterministic_training", True),
    }
    kind = manifest["kind"]
    config = manifest.get("config", {})
    if kind == "count_nb":
        # max_len and smoothing_k live in the manifest (exact decimals);
        # the float32 scalars are a fallback for manifest-less directories.
        max_len = float(config.get("max_sequence_length", arrays["scalars"][0]))
        smoothing_k = float(config.get("smoothing_k", arrays["scalars"][1]))
        total_tokens = float(arrays["scalars"][2])
        v = len(vocab)
        n_delta = 2 * int(max_len) - 1
        keys = (
            arrays["feature_w"].astype(np.int64) * v
            + arrays["feature_c"].astype(np.int64)
        ) * n_delta + arrays["feature_delta"].astype(np.int64)
        order = np.argsort(keys, kind="stable")
        return CountScorer(
            tokenizer=tokenizer,
            max_len=int(max_len),
            smoothing_k=smoothing_k,
            feature_keys=keys[order],
            feature_counts=arrays["feature_count"].astype(np.float64)[order],
            unigram=arrays["unigram"].astype(np.float64),
            total_context=arrays["total_context"].astype(np.float64),
            total_tokens=total_tokens,
            provenance=provenance,
        )
    if kind == "tiny_mlm":
        return TinyMlmScorer(
            tokenizer=tokenizer,
            max_len=int(arrays["scalars"][0]),
            embeddings=arrays["embeddings"],
            bias=arrays["bias"],
            output=arrays.get("output"),
            provenance=provenance,
        )
    raise ParseError(f"{directory}: unknown model kind {kind!r}")
