"""Neighbouring-sentence contrastive objective.

Positive pairs are batch index pairs (i, j) with |i - j| <= c that do not
cross a document break; every pair contributes -log p_ij where p_ij is a
temperature-scaled softmax of the agreement a_ij over the whole batch row
(the denominator always runs over all N rows, breaks or not). Three
agreement flavours are supported between the two views A and B:

    cross  : cos(a_i, b_j) + cos(b_i, a_j)
    within : cos(a_i, a_j) + cos(b_i, b_j)
    full   : cross + within

Single-view training degenerates to a_ij = cos(z_i, z_j) (pass one matrix).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import (
    DegenerateVectorError,
    DimensionError,
    InsufficientDataError,
    UsageError,
)

__all__ = [
    "AGREEMENT_KINDS",
    "TAU_MIN",
    "TAU_MAX",
    "PairSet",
    "context_pairs",
    "agreement",
    "agreement_matrix",
    "contrastive_loss",
    "pair_probabilities",
    "component_diagnostics",
    "clamp_tau",
]

AGREEMENT_KINDS = ("cross", "full", "within")

# Temperature is clamped into this range after every optimizer update.
TAU_MIN = 1e-2
TAU_MAX = 1e2


@dataclass(frozen=True)
class PairSet:
    """Ordered positive pairs of a batch, all within one document segment."""

    rows: np.ndarray
    cols: np.ndarray
    n: int
    window: int
    include_self: bool

    def __len__(self) -> int:
        return len(self.rows)


def _segments(n: int, breaks) -> np.ndarray:
    seg = np.zeros(n, dtype=np.int64)
    if breaks is None:
        return seg
    if len(breaks) != n:
        raise DimensionError(f"breaks length {len(breaks)} != batch length {n}")
    for i in range(1, n):
        seg[i] = seg[i - 1] + (1 if breaks[i] else 0)
    return seg


def context_pairs(batch_len: int, c: int, include_self: bool = True, breaks=None) -> PairSet:
    """All ordered (i, j) with |i - j| <= c inside one segment; (i, i)
    included only when ``include_self``."""
    if batch_len < 2:
        raise InsufficientDataError(f"need at least 2 sentences, got {batch_len}")
    if c < 1:
        raise UsageError(f"context window must be >= 1, got {c}")
    seg = _segments(batch_len, breaks)
    rows, cols = [], []
    for i in range(batch_len):
        lo = max(0, i - c)
        hi = min(batch_len - 1, i + c)
        for j in range(lo, hi + 1):
            if i == j and not include_self:
                continue
            if seg[i] != seg[j]:
                continue
            rows.append(i)
            cols.append(j)
    return PairSet(
        rows=np.asarray(rows, dtype=np.int64),
        cols=np.asarray(cols, dtype=np.int64),
        n=batch_len,
        window=c,
        include_self=include_self,
    )


# ---------------------------------------------------------------------
# agreement
# ---------------------------------------------------------------------


def _cos(u: np.ndarray, v: np.ndarray) -> float:
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise DegenerateVectorError("agreement of a zero vector is undefined")
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def agreement(zi_f, zi_g, zj_f, zj_g, kind: str = "cross") -> float:
    """Scalar agreement between sentences i and j across the two views."""
    if kind not in AGREEMENT_KINDS:
        raise UsageError(f"unknown agreement kind {kind!r}, expected one of {AGREEMENT_KINDS}")
    zi_f, zi_g = np.asarray(zi_f), np.asarray(zi_g)
    zj_f, zj_g = np.asarray(zj_f), np.asarray(zj_g)
    cross = _cos(zi_f, zj_g) + _cos(zi_g, zj_f)
    if kind == "cross":
        return cross
    within = _cos(zi_f, zj_f) + _cos(zi_g, zj_g)
    if kind == "within":
        return within
    return cross + within


def agreement_matrix(z_a: Tensor, z_b: Tensor | None, kind: str) -> Tensor:
    """A[i, j] = agreement between rows i and j; built on the tape so
    gradients flow back into both representation matrices."""
    a_hat = ad.normalize_rows(z_a)
    if z_b is None:
        return ad.matmul(a_hat, ad.transpose(a_hat))
    if kind not in AGREEMENT_KINDS:
        raise UsageError(f"unknown agreement kind {kind!r}, expected one of {AGREEMENT_KINDS}")
    b_hat = ad.normalize_rows(z_b)
    cross_half = ad.matmul(a_hat, ad.transpose(b_hat))
    cross = ad.add(cross_half, ad.transpose(cross_half))
    if kind == "cross":
        return cross
    within = ad.add(
        ad.matmul(a_hat, ad.transpose(a_hat)), ad.matmul(b_hat, ad.transpose(b_hat))
    )
    if kind == "within":
        return within
    return ad.add(cross, within)


# ---------------------------------------------------------------------
# loss
# ---------------------------------------------------------------------


def _check_loss_inputs(z_a, z_b, pairs, reduction):
    if reduction not in ("sum", "mean"):
        raise UsageError(f"unknown reduction {reduction!r}, expected 'sum' or 'mean'")
    if len(pairs) == 0:
        raise InsufficientDataError("no positive pairs in batch")
    if z_a.ndim != 2:
        raise DimensionError(f"expected (N, 2d) representations, got shape {z_a.shape}")
    if z_a.shape[0] != pairs.n:
        raise DimensionError(f"{z_a.shape[0]} rows but pair set built for n={pairs.n}")
    if z_b is not None and z_b.shape != z_a.shape:
        raise DimensionError(f"view shapes differ: {z_a.shape} vs {z_b.shape}")


def _scaled_agreements(z_a, z_b, tau, kind):
    if not isinstance(z_a, Tensor):
        z_a = Tensor(z_a)
    if z_b is not None and not isinstance(z_b, Tensor):
        z_b = Tensor(z_b)
    if not isinstance(tau, Tensor):
        tau = Tensor(np.asarray(float(tau), dtype=z_a.dtype))
    if float(tau.data) <= 0.0:
        raise UsageError(f"temperature must be positive, got {float(tau.data)}")
    a = agreement_matrix(z_a, z_b, kind)
    return ad.div(a, tau)


def contrastive_loss(z_a, z_b, pairs: PairSet, tau, kind: str = "cross", reduction: str = "sum") -> Tensor:
    """Sum (or mean) over positive pairs of -log softmax_i(a_i*/tau)[j].

    ``z_a``/``z_b`` are (N, 2d) row-per-sentence matrices (``z_b=None``
    for single-view training). Softmax rows are computed with
    max-subtraction; the subtracted row maxima are constants, which leaves
    gradients exact.
    """
    _check_loss_inputs(np.asarray(z_a.data if isinstance(z_a, Tensor) else z_a), z_b, pairs, reduction)
    t = _scaled_agreements(z_a, z_b, tau, kind)
    row_max = Tensor(t.data.max(axis=1, keepdims=True))
    expd = ad.texp(ad.sub(t, row_max))
    lse = ad.add(ad.tlog(ad.tsum(expd, axis=1)), Tensor(row_max.data[:, 0]))
    per_pair = ad.sub(ad.gather(lse, pairs.rows), ad.take_pairs(t, pairs.rows, pairs.cols))
    if reduction == "mean":
        return ad.tmean(per_pair)
    return ad.tsum(per_pair)


def pair_probabilities(z_a, z_b, tau, kind: str = "cross") -> np.ndarray:
    """The full softmax matrix p[i, j] (rows sum to one); diagnostics only."""
    with ad.no_grad():
        t = _scaled_agreements(z_a, z_b, tau, kind).data
    t = t - t.max(axis=1, keepdims=True)
    e = np.exp(t)
    return e / e.sum(axis=1, keepdims=True)


def clamp_tau(tau: Tensor) -> None:
    """Clamp the temperature into [TAU_MIN, TAU_MAX] after an update."""
    tau.data = np.clip(tau.data, TAU_MIN, TAU_MAX)


# ---------------------------------------------------------------------
# per-component cosine diagnostics
# ---------------------------------------------------------------------


def component_diagnostics(z_f, z_g, tau: float, breaks=None) -> tuple[float, float, float]:
    """Mean cosine similarity of adjacent in-document pairs, divided by the
    temperature, reported per component: within the first view (ff),
    within the second (gg), and the symmetrised cross term (fg)."""
    zf = np.asarray(z_f.data if isinstance(z_f, Tensor) else z_f)
    zg = np.asarray(z_g.data if isinstance(z_g, Tensor) else z_g)
    n = zf.shape[0]
    if n < 2:
        raise InsufficientDataError("diagnostics need at least 2 sentences")
    tau = float(tau)
    seg = _segments(n, breaks)
    ff = gg = fg = 0.0
    count = 0
    for i in range(n - 1):
        j = i + 1
        if seg[i] != seg[j]:
            continue
        ff += _cos(zf[i], zf[j])
        gg += _cos(zg[i], zg[j])
        fg += 0.5 * (_cos(zf[i], zg[j]) + _cos(zg[i], zf[j]))
        count += 1
    if count == 0:
        raise InsufficientDataError("no adjacent in-document pair in batch")
    return ff / (count * tau), gg / (count * tau), fg / (count * tau)
