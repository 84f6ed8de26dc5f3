"""Frozen pretrained word vectors: text-format loader and sentence embedding.

Vector file format: optional "count dim" header line (two integers), then
one token followed by D floats per line. Vectors are never updated by
training; out-of-vocabulary tokens embed as all-zero columns and still
count toward sentence length.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySentenceError, FormatError

__all__ = ["WordTable", "load_vectors", "embed_sentence"]


@dataclass
class WordTable:
    vocab: dict[str, int]
    matrix: np.ndarray  # (V, D)
    dim: int

    def __contains__(self, token: str) -> bool:
        return token in self.vocab


def _is_header(fields: list[str]) -> bool:
    if len(fields) != 2:
        return False
    try:
        int(fields[0]), int(fields[1])
    except ValueError:
        return False
    return True


def load_vectors(path, expected_dim: int | None = None) -> WordTable:
    """Parse a word-vector text file into a lookup table.

    Duplicate tokens keep their first occurrence. A wrong number of floats
    on any line is a format error naming that line.
    """
    vocab: dict[str, int] = {}
    rows: list[np.ndarray] = []
    dim = expected_dim
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                fields = raw.split()
                if not fields:
                    continue
                if lineno == 1 and _is_header(fields):
                    header_dim = int(fields[1])
                    if expected_dim is not None and header_dim != expected_dim:
                        raise FormatError(
                            f"header declares dimension {header_dim}, expected {expected_dim}",
                            line=lineno,
                        )
                    if dim is None:
                        dim = header_dim
                    continue
                token, values = fields[0], fields[1:]
                if dim is None:
                    dim = len(values)
                if len(values) != dim:
                    raise FormatError(
                        f"token {token!r} has {len(values)} values, expected {dim}",
                        line=lineno,
                    )
                try:
                    vec = np.array([float(v) for v in values], dtype=np.float64)
                except ValueError as exc:
                    raise FormatError(f"unparseable float: {exc}", line=lineno) from exc
                if not np.all(np.isfinite(vec)):
                    raise FormatError(f"non-finite vector for token {token!r}", line=lineno)
                if token in vocab:
                    continue
                vocab[token] = len(rows)
                rows.append(vec)
    except UnicodeDecodeError as exc:
        raise FormatError(f"vector file is not valid UTF-8: {exc}") from exc
    if not rows:
        raise FormatError("vector file contains no vectors")
    return WordTable(vocab=vocab, matrix=np.stack(rows), dim=dim)


def embed_sentence(table: WordTable, tokens, dtype=np.float64) -> np.ndarray:
    """Column j of the returned (D, M) matrix is the vector of token j;
    unknown tokens give zero columns (and still count toward M)."""
    if len(tokens) == 0:
        raise EmptySentenceError("cannot embed a sentence with no tokens")
    x = np.zeros((table.dim, len(tokens)), dtype=dtype)
    for j, tok in enumerate(tokens):
        idx = table.vocab.get(tok)
        if idx is not None:
            x[:, j] = table.matrix[idx]
    return x
