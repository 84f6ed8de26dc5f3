"""Plain-text corpus ingestion and contiguous-sentence batching.

Corpus file format: UTF-8, one sentence per line, blank line separates
documents. Batches are windows of adjacent sentences and never span a
document boundary.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, InsufficientDataError, UsageError

__all__ = [
    "Sentence",
    "ContiguousBatch",
    "tokenize",
    "load_corpus",
    "make_batches",
    "batch_stream",
]

_PUNCT = frozenset(string.punctuation)


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[str, ...]
    source_line: int


@dataclass(frozen=True)
class ContiguousBatch:
    """N corpus-adjacent sentences from one document.

    ``doc_break_before[i]`` is true when a document boundary immediately
    precedes sentence i; for window batches that can only be position 0.
    """

    sentences: tuple[Sentence, ...]
    doc_break_before: tuple[bool, ...]

    def __len__(self) -> int:
        return len(self.sentences)


def tokenize(line: str) -> list[str]:
    """Lowercase, split on whitespace, then peel leading/trailing ASCII
    punctuation off each chunk into separate tokens (interior punctuation,
    e.g. apostrophes, stays attached)."""
    tokens: list[str] = []
    for chunk in line.lower().split():
        lead: list[str] = []
        while chunk and chunk[0] in _PUNCT:
            lead.append(chunk[0])
            chunk = chunk[1:]
        trail: list[str] = []
        while chunk and chunk[-1] in _PUNCT:
            trail.append(chunk[-1])
            chunk = chunk[:-1]
        tokens.extend(lead)
        if chunk:
            tokens.append(chunk)
        tokens.extend(reversed(trail))
    return tokens


def load_corpus(path, max_len: int = 64) -> list[list[Sentence]]:
    """Read documents from a sentence-per-line file.

    Blank lines split documents (runs of blanks count once), zero-token
    lines are dropped, and sentences are truncated to ``max_len`` tokens.
    """
    if max_len < 1:
        raise UsageError(f"max_len must be >= 1, got {max_len}")
    docs: list[list[Sentence]] = []
    current: list[Sentence] = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                if not raw.strip():
                    if current:
                        docs.append(current)
                        current = []
                    continue
                tokens = tokenize(raw)
                if not tokens:
                    continue
                current.append(Sentence(tuple(tokens[:max_len]), lineno))
    except UnicodeDecodeError as exc:
        raise FormatError(f"corpus file is not valid UTF-8: {exc}") from exc
    if current:
        docs.append(current)
    return docs


def _epoch_windows(docs, n: int) -> list[tuple[int, int, int]]:
    """(doc index, start, length) for non-overlapping stride-n windows.
    Tail windows shorter than n are kept when they still hold >= 2
    sentences (a single leftover sentence forms no usable pair)."""
    windows = []
    for di, doc in enumerate(docs):
        for start in range(0, len(doc), n):
            length = min(n, len(doc) - start)
            if length >= 2:
                windows.append((di, start, length))
    return windows


def _window_batch(docs, di: int, start: int, length: int) -> ContiguousBatch:
    sentences = tuple(docs[di][start : start + length])
    breaks = (start == 0,) + (False,) * (length - 1)
    return ContiguousBatch(sentences, breaks)


def make_batches(docs, n: int, rng: np.random.Generator) -> list[ContiguousBatch]:
    """One epoch of batches: every stride-n window of every document, in an
    order shuffled by ``rng``."""
    if n < 2:
        raise UsageError(f"batch size must be >= 2, got {n}")
    windows = _epoch_windows(docs, n)
    if not windows:
        raise InsufficientDataError("no document contains >= 2 sentences")
    order = rng.permutation(len(windows))
    return [_window_batch(docs, *windows[i]) for i in order]


def batch_stream(docs, n: int, rng: np.random.Generator):
    """Endless batch generator; re-shuffles the window order every epoch."""
    if n < 2:
        raise UsageError(f"batch size must be >= 2, got {n}")
    if not _epoch_windows(docs, n):
        raise InsufficientDataError("no document contains >= 2 sentences")
    while True:
        for batch in make_batches(docs, n, rng):
            yield batch
