"""Reader for exported model directories.

A model directory holds:

    manifest.toml   kind ("count_nb" | "tiny_mlm"), training config,
                    provenance fields
    vocab.txt       one token per line, id order
    params.bin      named little-endian float32 arrays:
                        magic   b"KARTM\\0"
                        version u16 (1)
                        count   u32
                        arrays  repeated: name_len u16, name utf-8,
                                ndim u8, dims u32 each, float32 payload

This module is written against that file contract only; it shares no code
with the harness that produces the files.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

MAGIC = b"KARTM\x00"
SUPPORTED_VERSION = 1


class ModelFormatError(Exception):
    pass


def read_arrays(path: Path) -> dict[str, np.ndarray]:
    blob = path.read_bytes()
    if blob[: len(MAGIC)] != MAGIC:
        raise ModelFormatError(f"{path}: missing KARTM magic")
    version, count = struct.unpack_from("<HI", blob, len(MAGIC))
    if version != SUPPORTED_VERSION:
        raise ModelFormatError(f"{path}: unsupported version {version}")
    offset = len(MAGIC) + 6
    out: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        name = blob[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = struct.unpack_from("<B", blob, offset)
        offset += 1
        dims = []
        for _ in range(ndim):
            (d,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            dims.append(d)
        size = 1
        for d in dims:
            size *= d
        arr = np.frombuffer(blob, dtype="<f4", count=size, offset=offset)
        offset += 4 * size
        out[name] = arr.reshape(dims).copy()
    return out


@dataclass
class LoadedModel:
    kind: str
    vocab: list[str]
    arrays: dict[str, np.ndarray]
    config: dict
    model_id: str


def load_model_dir(directory: str | Path) -> LoadedModel:
    directory = Path(directory)
    manifest_path = directory / "manifest.toml"
    if not manifest_path.exists():
        raise ModelFormatError(f"{directory}: manifest.toml not found")
    with open(manifest_path, "rb") as f:
        manifest = tomllib.load(f)
    kind = manifest.get("kind")
    if kind not in ("count_nb", "tiny_mlm"):
        raise ModelFormatError(f"{directory}: unsupported kind {kind!r}")
    vocab = (directory / "vocab.txt").read_text(encoding="utf-8").splitlines()
    arrays = read_arrays(directory / "params.bin")
    return LoadedModel(
        kind=kind,
        vocab=vocab,
        arrays=arrays,
        config=manifest.get("config", {}),
        model_id=f"{kind}:{manifest.get('corpus_hash', '')[:12] or 'unhashed'}",
    )
