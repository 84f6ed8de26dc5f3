"""Synthetic clustered corpora for desk-scale experiments.

Each topic cluster is one document with its own vocabulary, so
cross-document sentence pairs share no tokens. Inside a document the
sentences slide a fixed-length window along the cluster vocabulary, whose
word vectors trace a closed loop around the cluster mean: consecutive
sentences overlap heavily in tokens and sit close on the loop, while
far-apart sentences drift to other loop phases (up to antipodal). That
layout carries both signals neighbouring-sentence training needs at desk
scale: strong local (adjacency) structure inside every batch, and
cluster-level separation that survives removing one principal direction.
"""

from __future__ import annotations

import numpy as np

__all__ = ["make_clustered_corpus", "write_clustered_corpus"]


def make_clustered_corpus(
    n_clusters: int = 5,
    sentences_per_cluster: int = 40,
    vocab_per_cluster: int = 80,
    word_dim: int = 16,
    sentence_len: int = 4,
    loops: float = 3.0,
    mean_scale: float = 2.0,
    radius: float = 1.4,
    seed: int = 1234,
) -> tuple[list[list[str]], dict[str, np.ndarray]]:
    """Returns (documents, vectors): one document of sentence strings per
    cluster and a token -> vector map.

    Token j of cluster k embeds at mean_k + radius * (cos t_j a_k +
    sin t_j b_k) with phase t_j winding ``loops`` times around a random
    2-plane (a_k, b_k); sentence t is the window of ``sentence_len``
    consecutive vocabulary tokens starting near position
    t / (T-1) * (V - sentence_len).
    """
    if vocab_per_cluster < sentence_len + 1:
        raise ValueError("vocabulary must be larger than the sentence window")
    rng = np.random.default_rng(seed)
    docs: list[list[str]] = []
    vectors: dict[str, np.ndarray] = {}
    for k in range(n_clusters):
        mean = rng.normal(size=word_dim)
        mean *= mean_scale / np.linalg.norm(mean)
        a = rng.normal(size=word_dim)
        a /= np.linalg.norm(a)
        b = rng.normal(size=word_dim)
        b -= (b @ a) * a
        b /= np.linalg.norm(b)
        vocab = [f"c{k}w{j}" for j in range(vocab_per_cluster)]
        for j, tok in enumerate(vocab):
            phase = 2.0 * np.pi * loops * j / vocab_per_cluster
            vectors[tok] = mean + radius * (np.cos(phase) * a + np.sin(phase) * b)
        step = (vocab_per_cluster - sentence_len) / max(1, sentences_per_cluster - 1)
        doc = []
        for t in range(sentences_per_cluster):
            p = int(round(step * t))
            doc.append(" ".join(vocab[p : p + sentence_len]))
        docs.append(doc)
    return docs, vectors


def write_clustered_corpus(corpus_path, vectors_path, **kwargs) -> None:
    """Write a clustered corpus as a blank-line-separated document file and
    its word vectors in "token v1 .. vD" text format with a header line."""
    docs, vectors = make_clustered_corpus(**kwargs)
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for di, doc in enumerate(docs):
            if di:
                fh.write("\n")
            for sentence in doc:
                fh.write(sentence + "\n")
    dim = len(next(iter(vectors.values())))
    with open(vectors_path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(vectors)} {dim}\n")
        for tok, vec in vectors.items():
            fh.write(tok + " " + " ".join(repr(float(v)) for v in vec) + "\n")
