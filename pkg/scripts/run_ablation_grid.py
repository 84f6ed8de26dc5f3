#!/usr/bin/env python3
"""Train the full view-configuration / agreement-kind grid on a synthetic
clustered corpus and print the summary table (multi-view fg under all
three agreement kinds, twin-encoder ff/gg, and the two single views)."""

import argparse
import tempfile
from pathlib import Path

from mvembed.config import TrainConfig
from mvembed.synthetic import write_clustered_corpus
from mvembed.training import ABLATION_COLUMNS, DEFAULT_GRID, ablate


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=None, help="output directory (default: temp)")
    ap.add_argument("--iters", type=int, default=500)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    root = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="mvembed_abl_"))
    root.mkdir(parents=True, exist_ok=True)
    corpus = root / "corpus.txt"
    vectors = root / "vectors.txt"
    write_clustered_corpus(corpus, vectors)

    base = TrainConfig(
        corpus=str(corpus),
        vectors=str(vectors),
        out=str(root),
        n=8,
        c=1,
        d=8,
        word_dim=16,
        lr=5e-4,
        max_iters=args.iters,
        seed=args.seed,
    )
    rows = ablate(base, grid=DEFAULT_GRID, out_dir=str(root))

    cols = ["views", "agreement", "status", "final_loss", "tau", "cos_fg", "agreement_gap"]
    fmt = {c: (lambda v: f"{v:.3f}" if isinstance(v, float) else str(v)) for c in cols}
    widths = {c: max(len(c), *(len(fmt[c](r[c])) for r in rows)) for c in cols}
    print("  ".join(c.ljust(widths[c]) for c in cols))
    for r in rows:
        print("  ".join(fmt[c](r[c]).ljust(widths[c]) for c in cols))
    print(f"\nsummary csv: {root / 'ablation_summary.csv'}")
    print(f"columns: {', '.join(ABLATION_COLUMNS)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
