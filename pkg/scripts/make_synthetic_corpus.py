#!/usr/bin/env python3
"""Generate a synthetic clustered corpus plus matching word vectors.

Writes <out>/corpus.txt (blank-line-separated documents, one sentence per
line) and <out>/vectors.txt (token + floats, header line), ready for
`mvembed train --corpus ... --vectors ... --word-dim <dim>`.
"""

import argparse
from pathlib import Path

from mvembed.synthetic import write_clustered_corpus


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data", help="output directory")
    ap.add_argument("--clusters", type=int, default=5)
    ap.add_argument("--sentences-per-cluster", type=int, default=40)
    ap.add_argument("--vocab-per-cluster", type=int, default=80)
    ap.add_argument("--word-dim", type=int, default=16)
    ap.add_argument("--sentence-len", type=int, default=4)
    ap.add_argument("--loops", type=float, default=3.0)
    ap.add_argument("--mean-scale", type=float, default=2.0)
    ap.add_argument("--radius", type=float, default=1.4)
    ap.add_argument("--seed", type=int, default=1234)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    corpus = out / "corpus.txt"
    vectors = out / "vectors.txt"
    write_clustered_corpus(
        corpus,
        vectors,
        n_clusters=args.clusters,
        sentences_per_cluster=args.sentences_per_cluster,
        vocab_per_cluster=args.vocab_per_cluster,
        word_dim=args.word_dim,
        sentence_len=args.sentence_len,
        loops=args.loops,
        mean_scale=args.mean_scale,
        radius=args.radius,
        seed=args.seed,
    )
    total = args.clusters * args.sentences_per_cluster
    print(f"wrote {corpus} ({total} sentences in {args.clusters} documents)")
    print(f"wrote {vectors} (dim {args.word_dim})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
