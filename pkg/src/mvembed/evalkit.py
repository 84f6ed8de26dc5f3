"""Unsupervised evaluation: correlation metrics, similarity-benchmark
scoring over gold-labelled sentence pairs, and nearest-neighbour retrieval.

An "encoder" here is anything with ``view_vectors(tokens, phase)``
returning one numpy vector per view; scoring always uses the
"unsupervised" phase, fits the per-view principal direction on all usable
sentences of the dataset at hand, and ensembles views by normalised
addition. Pair similarity is the cosine of the ensembled vectors.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .corpus import tokenize
from .errors import (
    DegenerateVectorError,
    EmptyEvaluationError,
    EmptySentenceError,
    FormatError,
    InsufficientDataError,
    UndefinedCorrelationError,
    UsageError,
)
from .postprocess import PcEstimate, postprocess_batch, remove_pc

__all__ = [
    "StsPair",
    "EvalReport",
    "NnIndex",
    "pearson",
    "spearman",
    "load_sts_tsv",
    "eval_sts",
    "build_nn_index",
    "nn_query",
    "worker_count",
    "encode_tokenized",
]


def worker_count() -> int:
    """Worker cap from MVEMBED_THREADS; defaults to 1 for determinism."""
    try:
        return max(1, int(os.environ.get("MVEMBED_THREADS", "1")))
    except ValueError:
        return 1


def encode_tokenized(encoder, token_lists, phase: str) -> list[list[np.ndarray]]:
    """Encode many token lists, fanning read-only work across threads when
    MVEMBED_THREADS > 1; output order always matches input order."""
    workers = worker_count()
    if workers == 1 or len(token_lists) < 2 * workers:
        return [encoder.view_vectors(toks, phase) for toks in token_lists]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda toks: encoder.view_vectors(toks, phase), token_lists))


# ---------------------------------------------------------------------
# correlation metrics
# ---------------------------------------------------------------------


def pearson(x, y) -> float:
    """Sample Pearson correlation; undefined when either input has zero
    variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise UsageError(f"pearson expects two equal-length series of >= 2 values, got {x.shape}, {y.shape}")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = np.sqrt((dx * dx).sum())
    sy = np.sqrt((dy * dy).sum())
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError("correlation undefined for constant input")
    return float(np.clip((dx * dy).sum() / (sx * sy), -1.0, 1.0))


def _average_ranks(v: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank range."""
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=np.float64)
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Pearson correlation of average-ranked values."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise UsageError(f"spearman expects two equal-length series of >= 2 values, got {x.shape}, {y.shape}")
    return pearson(_average_ranks(x), _average_ranks(y))


# ---------------------------------------------------------------------
# similarity benchmark
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class StsPair:
    sentence_a: str
    sentence_b: str
    gold: float


@dataclass(frozen=True)
class EvalReport:
    dataset: str
    pearson_x100: float
    spearman_x100: float
    pairs_used: int
    pairs_skipped: int

    def record(self) -> str:
        """Machine-readable one-line key=value form."""
        return (
            f"dataset={self.dataset} pearson_x100={self.pearson_x100:.4f} "
            f"spearman_x100={self.spearman_x100:.4f} pairs_used={self.pairs_used} "
            f"pairs_skipped={self.pairs_skipped}"
        )


def load_sts_tsv(path) -> list[StsPair]:
    """Tab-separated pairs: sentence_a<TAB>sentence_b<TAB>gold, one per line."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise FormatError(f"expected 3 tab-separated columns, got {len(fields)}", line=lineno)
            try:
                gold = float(fields[2])
            except ValueError as exc:
                raise FormatError(f"unparseable gold score {fields[2]!r}", line=lineno) from exc
            pairs.append(StsPair(fields[0], fields[1], gold))
    return pairs


def _ensemble_rows(view_mats: list[np.ndarray]) -> list[np.ndarray | None]:
    """Normalise each view row-wise and add; None marks rows where some
    view (or the sum) degenerated to zero."""
    n = view_mats[0].shape[0]
    out: list[np.ndarray | None] = []
    for i in range(n):
        parts = []
        ok = True
        for mat in view_mats:
            norm = np.linalg.norm(mat[i])
            if norm == 0.0:
                ok = False
                break
            parts.append(mat[i] / norm)
        if not ok:
            out.append(None)
            continue
        z = np.sum(parts, axis=0)
        out.append(z if np.linalg.norm(z) > 0.0 else None)
    return out


def _encode_population(encoder, texts: list[str], pc_iters: int, seed: int):
    """Tokenize, encode, per-view component removal over the whole
    population. Returns (vector or None) per input text."""
    token_lists = [tokenize(t) for t in texts]
    usable = []
    for idx, toks in enumerate(token_lists):
        if not toks:
            continue
        usable.append(idx)
    vecs_by_idx: dict[int, list[np.ndarray]] = {}
    encoded = encode_tokenized(encoder, [token_lists[i] for i in usable], "unsupervised")
    kept = []
    for idx, views in zip(usable, encoded):
        if any(np.linalg.norm(v) == 0.0 for v in views):
            continue
        vecs_by_idx[idx] = [np.asarray(v, dtype=np.float64) for v in views]
        kept.append(idx)
    if len(kept) < 2:
        raise InsufficientDataError(
            f"need at least 2 usable sentences to fit the principal direction, got {len(kept)}"
        )
    n_views = len(vecs_by_idx[kept[0]])
    view_mats = []
    estimates = []
    rng = np.random.default_rng(seed)
    for vi in range(n_views):
        cols = np.stack([vecs_by_idx[i][vi] for i in kept], axis=1)
        removed, est = postprocess_batch(cols, pc_iters, rng)
        if not np.any(removed):
            # Every representation was a multiple of the principal
            # direction (e.g. an encoder emitting one vector for all
            # sentences): similarities carry no variance at all.
            raise UndefinedCorrelationError(
                "representations have no variance beyond the principal direction"
            )
        view_mats.append(removed.T)
        estimates.append(est)
    rows = _ensemble_rows(view_mats)
    result: list[np.ndarray | None] = [None] * len(texts)
    for pos, idx in enumerate(kept):
        result[idx] = rows[pos]
    return result, estimates


def eval_sts(
    encoder,
    dataset: list[StsPair],
    dataset_name: str = "sts",
    pc_iters: int = 20,
    seed: int = 0,
) -> EvalReport:
    """Score a gold-labelled pair dataset.

    Every distinct sentence is encoded once in unsupervised mode; the
    per-view principal direction is fitted on all usable sentences of this
    dataset; pairs whose sentences degenerate (empty after tokenization,
    all-zero view vectors, or zeroed by removal) are skipped and counted.
    """
    if not dataset:
        raise EmptyEvaluationError("dataset is empty")
    texts: list[str] = []
    index: dict[str, int] = {}
    for p in dataset:
        for s in (p.sentence_a, p.sentence_b):
            if s not in index:
                index[s] = len(texts)
                texts.append(s)
    vectors, _ = _encode_population(encoder, texts, pc_iters, seed)
    system, gold = [], []
    skipped = 0
    for p in dataset:
        za = vectors[index[p.sentence_a]]
        zb = vectors[index[p.sentence_b]]
        if za is None or zb is None:
            skipped += 1
            continue
        system.append(float(za @ zb / (np.linalg.norm(za) * np.linalg.norm(zb))))
        gold.append(p.gold)
    if not system:
        raise EmptyEvaluationError("every pair was skipped")
    return EvalReport(
        dataset=dataset_name,
        pearson_x100=pearson(system, gold) * 100.0,
        spearman_x100=spearman(system, gold) * 100.0,
        pairs_used=len(system),
        pairs_skipped=skipped,
    )


# ---------------------------------------------------------------------
# nearest-neighbour retrieval
# ---------------------------------------------------------------------


@dataclass
class NnIndex:
    sentences: list[str]
    matrix: np.ndarray  # (n, dim), unit rows
    estimates: list[PcEstimate]
    encoder: object


def build_nn_index(encoder, sentences: list[str], pc_iters: int = 20, seed: int = 0) -> NnIndex:
    """Encode and store sentences with unit-normalised ensembled vectors;
    degenerate sentences are silently left out of the index."""
    vectors, estimates = _encode_population(encoder, list(sentences), pc_iters, seed)
    kept_texts, rows = [], []
    for text, vec in zip(sentences, vectors):
        if vec is None:
            continue
        kept_texts.append(text)
        rows.append(vec / np.linalg.norm(vec))
    if not rows:
        raise InsufficientDataError("no indexable sentences")
    return NnIndex(kept_texts, np.stack(rows), estimates, encoder)


def nn_query(index: NnIndex, query: str, k: int) -> list[tuple[str, float]]:
    """Top-k index sentences by cosine, descending; ties keep insertion
    order; k beyond the index size returns the whole ranked index."""
    if k < 1:
        raise UsageError(f"k must be >= 1, got {k}")
    tokens = tokenize(query)
    if not tokens:
        raise EmptySentenceError("query has no tokens")
    views = index.encoder.view_vectors(tokens, "unsupervised")
    parts = []
    for vec, est in zip(views, index.estimates):
        removed = remove_pc(np.asarray(vec, dtype=np.float64)[:, None], est.u)[:, 0]
        norm = np.linalg.norm(removed)
        if norm == 0.0:
            raise DegenerateVectorError("query representation vanished")
        parts.append(removed / norm)
    z = np.sum(parts, axis=0)
    norm = np.linalg.norm(z)
    if norm == 0.0:
        raise DegenerateVectorError("query views cancelled out")
    scores = index.matrix @ (z / norm)
    order = np.argsort(-scores, kind="stable")[: min(k, len(scores))]
    return [(index.sentences[i], float(scores[i])) for i in order]
