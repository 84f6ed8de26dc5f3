"""Command-line interface.

Subcommands: train, encode, eval-sts, nn, ablate, inspect. A key=value
config file (--config) provides defaults; explicit flags override it.
MVEMBED_THREADS caps read-only encoding workers (default 1, fully
deterministic).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import evalkit
from .checkpoint import load_checkpoint, read_manifest
from .config import TrainConfig, config_from_sources, parse_config_file
from .corpus import tokenize
from .encoders import parameter_count
from .errors import (
    FormatError,
    InsufficientDataError,
    MissingViewError,
    MvembedError,
    UsageError,
)
from .model import SentenceEncoder, ViewSubsetEncoder
from .postprocess import ensemble_supervised, postprocess_batch
from .training import ablate, train
from .wordvec import load_vectors

REPR_CHOICES = ("auto", "f", "g", "ensemble")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--corpus", help="training corpus (one sentence per line, blank line = new document)")
    p.add_argument("--vectors", help="word vector text file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--n", type=int, help="batch size")
    p.add_argument("--d", type=int, help="hidden size per direction")
    p.add_argument("--c", type=int, help="context window")
    p.add_argument("--lr", type=float, help="learning rate")
    p.add_argument("--seed", type=int, help="rng seed")
    p.add_argument("--agreement", choices=("cross", "full", "within"), help="agreement kind")
    p.add_argument("--views", choices=("fg", "ff", "gg", "f", "g"), help="view configuration")
    p.add_argument("--include-self", dest="include_self", choices=("true", "false"),
                   help="count (i,i) as a positive pair")
    p.add_argument("--reduction", choices=("sum", "mean"), help="loss reduction")
    p.add_argument("--max-iters", dest="max_iters", type=int, help="training iterations")
    p.add_argument("--log-every", dest="log_every", type=int, help="diagnostics interval")
    p.add_argument("--grad-clip", dest="grad_clip", type=float, help="global gradient-norm cap")
    p.add_argument("--max-len", dest="max_len", type=int, help="sentence truncation length")
    p.add_argument("--word-dim", dest="word_dim", type=int, help="word vector dimension")
    p.add_argument("--dtype", choices=("float64", "float32"), help="compute precision")
    p.add_argument("--pc-in-training", dest="pc_in_training", choices=("true", "false"),
                   help="remove the per-batch principal direction during training")
    p.add_argument("--pc-iters", dest="pc_iters", type=int, help="power iteration count")
    p.add_argument("--tau-init", dest="tau_init", type=float, help="initial temperature")
    p.add_argument("--fix-tau", dest="fix_tau", choices=("true", "false"), help="freeze the temperature")
    p.add_argument("--f-last-mode", dest="f_last_mode", choices=("per_direction", "literal"),
                   help="last-step convention of the GRU view")


_CONFIG_KEYS = (
    "corpus", "vectors", "out", "n", "d", "c", "lr", "seed", "agreement", "views",
    "include_self", "reduction", "max_iters", "log_every", "grad_clip", "max_len",
    "word_dim", "dtype", "pc_in_training", "pc_iters", "tau_init", "fix_tau",
    "f_last_mode",
)


def _build_config(args) -> TrainConfig:
    file_values = parse_config_file(args.config) if args.config else {}
    overrides = {k: getattr(args, k) for k in _CONFIG_KEYS if getattr(args, k, None) is not None}
    cfg = config_from_sources(file_values, overrides)
    if not cfg.corpus or not cfg.vectors:
        raise UsageError("a corpus file and a vectors file are required (flags or config file)")
    return cfg


def _load_encoder(checkpoint_path: str, vectors_path: str):
    model, manifest = load_checkpoint(checkpoint_path)
    table = load_vectors(vectors_path, model.word_dim)
    return SentenceEncoder(model, table), manifest


def _select_views(encoder: SentenceEncoder, which: str):
    if which == "auto":
        return encoder
    if which == "ensemble":
        if len(encoder.model.views) < 2:
            raise MissingViewError(
                f"view config {encoder.model.view_config!r} has a single view; no ensemble"
            )
        return encoder
    return ViewSubsetEncoder(encoder, [encoder.require_view(which)])


# ---------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------


def _cmd_train(args) -> int:
    cfg = _build_config(args)
    result = train(cfg)
    print(f"iterations: {result.iterations}")
    print(f"epochs: {result.epochs}")
    print(f"final_loss: {result.final_loss!r}")
    print(f"tau: {result.tau!r}")
    print(f"checkpoint: {result.checkpoint_path}")
    print(f"diagnostics: {result.diagnostics_path}")
    return 0


def _read_sentences_file(path) -> list[tuple[int, str, list[str]]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.rstrip("\n")
            tokens = tokenize(text)
            if not tokens:
                raise FormatError("line has no tokens to encode", line=lineno)
            rows.append((lineno, text, tokens))
    if not rows:
        raise InsufficientDataError(f"{path} contains no sentences")
    return rows


def _cmd_encode(args) -> int:
    encoder, _ = _load_encoder(args.checkpoint, args.vectors)
    rows = _read_sentences_file(args.input)
    token_lists = [r[2] for r in rows]
    encoded = evalkit.encode_tokenized(encoder, token_lists, args.mode)
    n_views = len(encoded[0])
    view_mats = []
    rng = np.random.default_rng(args.seed)
    for vi in range(n_views):
        cols = np.stack([np.asarray(vecs[vi], dtype=np.float64) for vecs in encoded], axis=1)
        removed, _ = postprocess_batch(cols, args.pc_iters, rng)
        normed = np.empty_like(removed)
        for j in range(removed.shape[1]):
            norm = np.linalg.norm(removed[:, j])
            if norm == 0.0:
                raise FormatError(
                    "sentence representation vanished after component removal",
                    line=rows[j][0],
                )
            normed[:, j] = removed[:, j] / norm
        view_mats.append(normed)
    out_rows = []
    for j in range(len(rows)):
        parts = [m[:, j] for m in view_mats]
        if args.mode == "unsupervised":
            vec = np.sum(parts, axis=0)
        elif len(parts) == 2 and encoder.model.view_config == "fg":
            vec = ensemble_supervised(parts[0], parts[1])
        else:
            vec = np.concatenate(parts)
        out_rows.append(" ".join(repr(float(v)) for v in vec))
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        for row in out_rows:
            fh.write(row + "\n")
    print(f"encoded {len(out_rows)} sentences -> {args.out}")
    return 0


def _cmd_eval_sts(args) -> int:
    encoder, _ = _load_encoder(args.checkpoint, args.vectors)
    encoder = _select_views(encoder, args.repr)
    pairs = evalkit.load_sts_tsv(args.tsv)
    report = evalkit.eval_sts(
        encoder, pairs, dataset_name=args.dataset_name, pc_iters=args.pc_iters, seed=args.seed
    )
    print(f"dataset:        {report.dataset}")
    print(f"pearson  x100:  {report.pearson_x100:.4f}")
    print(f"spearman x100:  {report.spearman_x100:.4f}")
    print(f"pairs used:     {report.pairs_used}")
    print(f"pairs skipped:  {report.pairs_skipped}")
    print(report.record())
    return 0


def _cmd_nn(args) -> int:
    encoder, _ = _load_encoder(args.checkpoint, args.vectors)
    rows = _read_sentences_file(args.sentences)
    index = evalkit.build_nn_index(
        encoder, [r[1] for r in rows], pc_iters=args.pc_iters, seed=args.seed
    )
    for query in args.query:
        print(f"query: {query}")
        for sentence, score in evalkit.nn_query(index, query, args.k):
            print(f"  {score:+.6f}  {sentence}")
    return 0


def _cmd_ablate(args) -> int:
    cfg = _build_config(args)
    grid = None
    if args.grid:
        grid = []
        for cell in args.grid.split(","):
            if ":" in cell:
                views, kind = cell.split(":", 1)
            else:
                views, kind = cell, None
            grid.append((views.strip(), kind.strip() if kind else None))
    rows = ablate(cfg, grid=grid, out_dir=cfg.out)
    cols = ["views", "agreement", "status", "final_loss", "agreement_gap"]
    widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in cols}
    print("  ".join(c.ljust(widths[c]) for c in cols))
    for r in rows:
        print("  ".join(str(r[c]).ljust(widths[c]) for c in cols))
    print(f"summary: {cfg.out}/ablation_summary.csv")
    return 0


def _cmd_inspect(args) -> int:
    manifest = read_manifest(args.checkpoint)
    exact = 0
    for entry in manifest["arrays"]:
        n = 1
        for extent in entry["shape"]:
            n *= extent
        exact += n
    d = manifest["d"]
    print(f"view_config: {manifest['view_config']}")
    print(f"d: {d}")
    print(f"word_dim: {manifest['word_dim']}")
    print(f"dtype: {manifest['dtype']}")
    print(f"iteration: {manifest['iteration']}")
    print(f"epoch: {manifest['epoch']}")
    print(f"seed: {manifest['seed']}")
    print(f"tau: {manifest['tau']!r}")
    print(f"parameters_exact: {exact:,}")
    print(f"parameters_headline_formula: {parameter_count(d):,}")
    return 0


# ---------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mvembed", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("encode", help="encode a sentences file to vectors")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vectors", required=True)
    p.add_argument("--input", required=True, help="one sentence per line")
    p.add_argument("--out", required=True, help="output vectors file")
    p.add_argument("--mode", choices=("supervised", "unsupervised"), default="unsupervised")
    p.add_argument("--pc-iters", dest="pc_iters", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("eval-sts", help="score a tab-separated similarity dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vectors", required=True)
    p.add_argument("--tsv", required=True, help="sentence_a<TAB>sentence_b<TAB>gold")
    p.add_argument("--dataset-name", dest="dataset_name", default="sts")
    p.add_argument("--repr", choices=REPR_CHOICES, default="auto",
                   help="which representation to evaluate")
    p.add_argument("--pc-iters", dest="pc_iters", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_eval_sts)

    p = sub.add_parser("nn", help="nearest-neighbour sentence retrieval")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--vectors", required=True)
    p.add_argument("--sentences", required=True, help="index sentences, one per line")
    p.add_argument("--query", action="append", required=True, help="query text (repeatable)")
    p.add_argument("-k", type=int, default=5)
    p.add_argument("--pc-iters", dest="pc_iters", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_nn)

    p = sub.add_parser("ablate", help="train a grid of view/agreement variants")
    _add_config_flags(p)
    p.add_argument("--grid", help="comma list of cells like fg:cross,fg:full,f "
                                  "(view alone means single-view agreement)")
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("inspect", help="summarise a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=_cmd_inspect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MvembedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
