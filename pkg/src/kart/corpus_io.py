"""Corpus and PhiTable files.

Both are JSON-lines: one document (or one patient record) per line. Corpus
files may start with an optional metadata line ({"kind": "corpus_meta", ...})
carrying split and provenance; files without it — e.g. externally authored
corpora being ingested — default to split "train" with empty provenance.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .errors import ParseError
from .records import PhiRecord, PhiTable, validate_table
from .spans import Corpus, Document, Provenance, validate_corpus


def atomic_write_text(path: str | Path, data: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    lines = [
        _dumps(
            {
                "kind": "corpus_meta",
                "split": corpus.split,
                "provenance": corpus.provenance.to_dict(),
            }
        )
    ]
    lines.extend(_dumps(doc.to_dict()) for doc in corpus.documents)
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_corpus(path: str | Path, known_patients: set[int] | None = None) -> Corpus:
    documents: list[Document] = []
    split = "train"
    provenance = Provenance()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON: {e.msg}", line=lineno) from e
            if lineno == 1 and obj.get("kind") == "corpus_meta":
                split = obj.get("split", "train")
                provenance = Provenance.from_dict(obj.get("provenance", {}))
                continue
            try:
                documents.append(Document.from_dict(obj))
            except (KeyError, TypeError, ValueError) as e:
                raise ParseError(f"bad document record: {e}", line=lineno) from e
    corpus = Corpus(
        documents=tuple(documents), split=split, provenance=provenance
    )
    validate_corpus(corpus, known_patients)
    return corpus


def save_table(table: PhiTable, path: str | Path) -> None:
    lines = [_dumps({"kind": "phi_table_meta", "role": table.role})]
    lines.extend(_dumps(row.to_dict()) for row in table.rows)
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_table(path: str | Path) -> PhiTable:
    rows: list[PhiRecord] = []
    role = "gold"
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON: {e.msg}", line=lineno) from e
            if lineno == 1 and obj.get("kind") == "phi_table_meta":
                role = obj.get("role", "gold")
                continue
            try:
                rows.append(PhiRecord.from_dict(obj))
            except (KeyError, TypeError, ValueError) as e:
                raise ParseError(f"bad patient record: {e}", line=lineno) from e
    table = PhiTable(rows=rows, role=role)
    validate_table(table)
    return table
