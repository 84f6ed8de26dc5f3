"""The training loop, per-run diagnostics, and the ablation runner.

Each iteration takes one batch of contiguous sentences, encodes every view
on the tape, optionally removes each view's per-batch principal direction
(the fitted direction is a constant during backprop; gradients flow only
through the projection itself), evaluates the contrastive loss, and takes
a clipped Adam step over all trainable parameters including the
temperature, which is clamped after every update.

Diagnostics CSV: header ``iter,loss,tau,cos_ff,cos_gg,cos_fg`` and one row
every ``log_every`` iterations, fully determined by (config, seed).
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, replace

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .checkpoint import save_checkpoint
from .config import TrainConfig
from .corpus import ContiguousBatch, load_corpus, make_batches
from .errors import (
    DegenerateVectorError,
    InsufficientDataError,
    MvembedError,
    NumericError,
)
from .model import MultiViewModel, build_model
from .objective import (
    agreement,
    clamp_tau,
    component_diagnostics,
    context_pairs,
    contrastive_loss,
)
from .optim import AdamState, adam_step, clip_global_norm
from .postprocess import postprocess_batch
from .wordvec import WordTable, embed_sentence, load_vectors

__all__ = [
    "DIAG_HEADER",
    "TrainResult",
    "train",
    "encode_training_views",
    "agreement_gap",
    "ablate",
]

DIAG_HEADER = "iter,loss,tau,cos_ff,cos_gg,cos_fg"


@dataclass
class TrainResult:
    checkpoint_path: str
    diagnostics_path: str
    iterations: int
    epochs: int
    final_loss: float
    tau: float
    model: MultiViewModel


def _fmt(x: float) -> str:
    return repr(float(x))


def _remove_direction(z: Tensor, u: np.ndarray) -> Tensor:
    """In-graph projection z_i <- z_i - u (u^T z_i) per row, with the
    fitted u held constant (no gradient through the fit)."""
    n = z.shape[0]
    coef = ad.matmul(z, Tensor(u))
    proj = ad.matmul(ad.reshape(coef, (n, 1)), Tensor(u[None, :]))
    return ad.sub(z, proj)


def encode_training_views(
    model: MultiViewModel,
    batch_x: list[np.ndarray],
    pc_in_training: bool,
    pc_iters: int,
    pc_rng,
) -> list[Tensor]:
    """Per-view (N, 2d) training representations, component-removed when
    configured. Rows align with the batch order."""
    out = []
    for view in model.views:
        z = ad.stack_rows([view.encode_train(x) for x in batch_x])
        if pc_in_training:
            with ad.no_grad():
                _, est = postprocess_batch(z.data.T, pc_iters, pc_rng)
            z = _remove_direction(z, est.u.astype(z.dtype, copy=False))
        out.append(z)
    return out


def _batch_loss(model, zs, batch: ContiguousBatch, cfg: TrainConfig):
    pairs = context_pairs(len(batch), cfg.c, cfg.include_self, batch.doc_break_before)
    if len(zs) == 1:
        return contrastive_loss(zs[0], None, pairs, model.tau, reduction=cfg.reduction)
    return contrastive_loss(zs[0], zs[1], pairs, model.tau, kind=cfg.agreement, reduction=cfg.reduction)


def train(cfg: TrainConfig) -> TrainResult:
    """Run the configured training job; writes diagnostics CSV and a final
    checkpoint under ``cfg.out``."""
    cfg.validate()
    docs = load_corpus(cfg.corpus, cfg.max_len)
    if not docs:
        raise InsufficientDataError(f"corpus {cfg.corpus!r} contains no sentences")
    table = load_vectors(cfg.vectors, cfg.word_dim)
    dtype = cfg.np_dtype

    init_seed, batch_seed, pc_seed = np.random.SeedSequence(cfg.seed).spawn(3)
    model = build_model(
        cfg.views,
        cfg.d,
        cfg.word_dim,
        rng=np.random.default_rng(init_seed),
        dtype=dtype,
        tau_init=cfg.tau_init,
        f_last_mode=cfg.f_last_mode,
        fix_tau=cfg.fix_tau,
    )
    batch_rng = np.random.default_rng(batch_seed)
    pc_rng = np.random.default_rng(pc_seed)

    params = model.trainable_parameters()
    state = AdamState.for_params(params)

    os.makedirs(cfg.out, exist_ok=True)
    diagnostics_path = os.path.join(cfg.out, "diagnostics.csv")
    checkpoint_path = os.path.join(cfg.out, "checkpoint.mvck")

    iteration = 0
    epoch = 0
    final_loss = float("nan")
    diverged = None
    with open(diagnostics_path, "w", encoding="utf-8", newline="") as diag:
        diag.write(DIAG_HEADER + "\n")
        while iteration < cfg.max_iters:
            for batch in make_batches(docs, cfg.n, batch_rng):
                iteration += 1
                xs = [embed_sentence(table, s.tokens, dtype) for s in batch.sentences]
                zs = encode_training_views(model, xs, cfg.pc_in_training, cfg.pc_iters, pc_rng)
                loss = _batch_loss(model, zs, batch, cfg)
                final_loss = float(loss.data)
                if not np.isfinite(final_loss):
                    diverged = NumericError(f"loss diverged at iteration {iteration}")
                    break
                ad.backward(loss)
                grads = ad.collect_grads(params)
                ad.zero_grads(params)
                grads = clip_global_norm(grads, cfg.grad_clip)
                adam_step(params, grads, state, cfg.lr)
                if not cfg.fix_tau:
                    clamp_tau(model.tau)
                if iteration % cfg.log_every == 0:
                    z_f = zs[0].data
                    z_g = zs[1].data if len(zs) > 1 else zs[0].data
                    ff, gg, fg = component_diagnostics(
                        z_f, z_g, float(model.tau.data), batch.doc_break_before
                    )
                    diag.write(
                        f"{iteration},{_fmt(final_loss)},{_fmt(model.tau.data)},"
                        f"{_fmt(ff)},{_fmt(gg)},{_fmt(fg)}\n"
                    )
                if iteration >= cfg.max_iters:
                    break
            else:
                epoch += 1
                continue
            break
    if diverged is not None:
        raise diverged

    rng_states = {
        "batch": batch_rng.bit_generator.state,
        "pc": pc_rng.bit_generator.state,
    }
    save_checkpoint(model, checkpoint_path, iteration, cfg.seed, epoch=epoch, rng_states=rng_states)
    return TrainResult(
        checkpoint_path=checkpoint_path,
        diagnostics_path=diagnostics_path,
        iterations=iteration,
        epochs=epoch,
        final_loss=final_loss,
        tau=float(model.tau.data),
        model=model,
    )


# ---------------------------------------------------------------------
# post-training analysis
# ---------------------------------------------------------------------


def _corpus_train_vectors(model, table, docs, pc_iters, rng):
    """Training-phase view representations for every corpus sentence,
    component-removed per view over the whole corpus population."""
    doc_spans = []
    xs = []
    for doc in docs:
        start = len(xs)
        xs.extend(embed_sentence(table, s.tokens, model.dtype) for s in doc)
        doc_spans.append((start, len(xs)))
    mats = []
    with ad.no_grad():
        for view in model.views:
            cols = np.stack([view.encode_train(x).data for x in xs], axis=1)
            removed, _ = postprocess_batch(cols, pc_iters, rng)
            mats.append(removed.T)
    return mats, doc_spans


def _np_cos(u, v) -> float:
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise DegenerateVectorError("zero vector in agreement")
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def _pair_agreement(mats, i, j, kind):
    if len(mats) == 1:
        return _np_cos(mats[0][i], mats[0][j])
    return agreement(mats[0][i], mats[0][j], mats[1][i], mats[1][j], kind)


def agreement_gap(
    model: MultiViewModel,
    table: WordTable,
    docs,
    kind: str = "cross",
    pc_iters: int = 20,
    seed: int = 0,
    n_random: int = 1000,
) -> tuple[float, float]:
    """(mean agreement over in-document adjacent pairs, mean over random
    cross-document pairs). The difference measures how much neighbourhood
    structure the representations carry."""
    rng = np.random.default_rng(seed)
    mats, doc_spans = _corpus_train_vectors(model, table, docs, pc_iters, rng)
    multi_doc = [s for s in doc_spans if s[1] - s[0] >= 1]
    if len(multi_doc) < 2:
        raise InsufficientDataError("cross-document pairs need at least 2 documents")

    adjacent = []
    for start, stop in doc_spans:
        for i in range(start, stop - 1):
            try:
                adjacent.append(_pair_agreement(mats, i, i + 1, kind))
            except MvembedError:
                continue
    if not adjacent:
        raise InsufficientDataError("no adjacent in-document pairs")

    randoms = []
    attempts = 0
    while len(randoms) < n_random and attempts < 20 * n_random:
        attempts += 1
        da, db = rng.choice(len(doc_spans), size=2, replace=False)
        i = int(rng.integers(doc_spans[da][0], doc_spans[da][1]))
        j = int(rng.integers(doc_spans[db][0], doc_spans[db][1]))
        try:
            randoms.append(_pair_agreement(mats, i, j, kind))
        except MvembedError:
            continue
    if not randoms:
        raise InsufficientDataError("no usable cross-document pairs")
    return float(np.mean(adjacent)), float(np.mean(randoms))


# ---------------------------------------------------------------------
# ablation grid
# ---------------------------------------------------------------------

DEFAULT_GRID = [
    ("fg", "cross"),
    ("fg", "full"),
    ("fg", "within"),
    ("ff", "cross"),
    ("gg", "cross"),
    ("f", None),
    ("g", None),
]

ABLATION_COLUMNS = [
    "views",
    "agreement",
    "status",
    "final_loss",
    "tau",
    "cos_ff",
    "cos_gg",
    "cos_fg",
    "adjacent_agreement",
    "random_agreement",
    "agreement_gap",
    "corpus_sha256",
    "diagnostics_csv",
]


def _file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _last_csv_row(path) -> dict[str, float]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        last = None
        for line in fh:
            if line.strip():
                last = line.strip().split(",")
    if last is None:
        raise InsufficientDataError(f"no logged rows in {path}")
    return {k: float(v) for k, v in zip(header, last)}


def ablate(base: TrainConfig, grid=None, out_dir: str | None = None) -> list[dict]:
    """Train every (view config, agreement kind) cell of the grid with the
    shared seed and corpus; one summary row per run. A failing run is
    recorded and the rest continue."""
    grid = list(grid) if grid is not None else list(DEFAULT_GRID)
    if not grid:
        raise InsufficientDataError("ablation grid is empty")
    out_dir = out_dir or base.out
    os.makedirs(out_dir, exist_ok=True)
    corpus_hash = _file_sha256(base.corpus)
    rows = []
    for views, kind in grid:
        run_name = views if kind is None else f"{views}_{kind}"
        run_cfg = replace(
            base,
            views=views,
            agreement=kind if kind is not None else base.agreement,
            out=os.path.join(out_dir, f"run_{run_name}"),
        )
        row = {col: "" for col in ABLATION_COLUMNS}
        row["views"] = views
        row["agreement"] = kind if kind is not None else "single"
        row["corpus_sha256"] = corpus_hash
        try:
            result = train(run_cfg)
            docs = load_corpus(run_cfg.corpus, run_cfg.max_len)
            table = load_vectors(run_cfg.vectors, run_cfg.word_dim)
            gap_kind = kind if kind is not None else "cross"
            adj, rand = agreement_gap(
                result.model, table, docs, gap_kind, run_cfg.pc_iters, run_cfg.seed
            )
            last = _last_csv_row(result.diagnostics_path)
            row.update(
                status="ok",
                final_loss=result.final_loss,
                tau=result.tau,
                cos_ff=last["cos_ff"],
                cos_gg=last["cos_gg"],
                cos_fg=last["cos_fg"],
                adjacent_agreement=adj,
                random_agreement=rand,
                agreement_gap=adj - rand,
                diagnostics_csv=result.diagnostics_path,
            )
        except (MvembedError, OSError) as exc:
            row["status"] = f"failed: {exc}"
        rows.append(row)
    summary_path = os.path.join(out_dir, "ablation_summary.csv")
    with open(summary_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(ABLATION_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in ABLATION_COLUMNS) + "\n")
    return rows
