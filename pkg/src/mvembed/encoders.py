"""The two sentence views: a bidirectional GRU and a linear mean-of-vectors
projection, plus pooling and phase-specific representation composition.

Conventions
-----------
Hidden-state matrix H has shape (2d, M): column t is [forward state at t;
backward state at t], forward scanning left to right, backward scanning
right to left from zero initial states. The training representation of
the GRU view is, by default, the final state of each direction
[fwd_M ; bwd_1]; the literal final column [fwd_M ; bwd_M] is available via
``last_mode="literal"`` (the backward half then only saw the last token).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DimensionError, EmptySentenceError, UsageError
from .optim import he_init

__all__ = [
    "GruDirectionParams",
    "BiGruParams",
    "LinearParams",
    "EncodedViews",
    "init_gru_direction",
    "init_bigru",
    "init_linear",
    "gru_cell",
    "bigru_forward",
    "encode_f_train",
    "encode_g",
    "project_tokens",
    "pool",
    "compose_f",
    "compose_g",
    "compose_representation",
    "parameter_count",
    "exact_parameter_count",
]

POOL_KINDS = ("max", "mean", "min", "last")
LAST_MODES = ("per_direction", "literal")


@dataclass
class GruDirectionParams:
    """One GRU direction: reset gate r, update gate z, candidate h."""

    W_r: Tensor
    W_z: Tensor
    W_h: Tensor
    U_r: Tensor
    U_z: Tensor
    U_h: Tensor
    b_r: Tensor
    b_z: Tensor
    b_h: Tensor

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {
            f"{prefix}.W_r": self.W_r,
            f"{prefix}.W_z": self.W_z,
            f"{prefix}.W_h": self.W_h,
            f"{prefix}.U_r": self.U_r,
            f"{prefix}.U_z": self.U_z,
            f"{prefix}.U_h": self.U_h,
            f"{prefix}.b_r": self.b_r,
            f"{prefix}.b_z": self.b_z,
            f"{prefix}.b_h": self.b_h,
        }


@dataclass
class BiGruParams:
    fwd: GruDirectionParams
    bwd: GruDirectionParams
    d: int
    in_dim: int

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {**self.fwd.named(f"{prefix}.fwd"), **self.bwd.named(f"{prefix}.bwd")}


@dataclass
class LinearParams:
    W: Tensor  # (2d, D)

    def named(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.W": self.W}


def init_gru_direction(d: int, in_dim: int, rng, dtype=np.float64) -> GruDirectionParams:
    """He-initialised weights (fan_in = input width of each matrix); gate
    biases start at 1, candidate bias at 0."""
    return GruDirectionParams(
        W_r=ad.parameter(he_init((d, in_dim), in_dim, rng, dtype)),
        W_z=ad.parameter(he_init((d, in_dim), in_dim, rng, dtype)),
        W_h=ad.parameter(he_init((d, in_dim), in_dim, rng, dtype)),
        U_r=ad.parameter(he_init((d, d), d, rng, dtype)),
        U_z=ad.parameter(he_init((d, d), d, rng, dtype)),
        U_h=ad.parameter(he_init((d, d), d, rng, dtype)),
        b_r=ad.parameter(np.ones(d, dtype=dtype)),
        b_z=ad.parameter(np.ones(d, dtype=dtype)),
        b_h=ad.parameter(np.zeros(d, dtype=dtype)),
    )


def init_bigru(d: int, in_dim: int, rng, dtype=np.float64) -> BiGruParams:
    return BiGruParams(
        fwd=init_gru_direction(d, in_dim, rng, dtype),
        bwd=init_gru_direction(d, in_dim, rng, dtype),
        d=d,
        in_dim=in_dim,
    )


def init_linear(d: int, in_dim: int, rng, dtype=np.float64) -> LinearParams:
    return LinearParams(W=ad.parameter(he_init((2 * d, in_dim), in_dim, rng, dtype)))


# ---------------------------------------------------------------------
# GRU cell (fused op with hand-written backward)
# ---------------------------------------------------------------------


def gru_cell(x, h_prev, p: GruDirectionParams) -> Tensor:
    """One GRU step:

        r = sigmoid(W_r x + U_r h + b_r)
        z = sigmoid(W_z x + U_z h + b_z)
        hc = tanh(W_h x + U_h (r*h) + b_h)
        h' = (1 - z)*h + z*hc

    Fused into a single tape node: the whole step backward runs as one
    closure over the cached gate values, which keeps BPTT graphs short.
    """
    if not isinstance(x, Tensor):
        x = Tensor(x)
    if not isinstance(h_prev, Tensor):
        h_prev = Tensor(h_prev)
    d = p.U_r.shape[0]
    if x.ndim != 1 or h_prev.ndim != 1:
        raise DimensionError("gru_cell expects vector inputs")
    if p.W_r.shape[1] != x.shape[0] or h_prev.shape[0] != d:
        raise DimensionError(
            f"gru_cell shapes: x {x.shape}, h {h_prev.shape}, W_r {p.W_r.shape}, U_r {p.U_r.shape}"
        )

    xv, hv = x.data, h_prev.data
    r = ad.sigmoid(p.W_r.data @ xv + p.U_r.data @ hv + p.b_r.data)
    z = ad.sigmoid(p.W_z.data @ xv + p.U_z.data @ hv + p.b_z.data)
    rh = r * hv
    hc = np.tanh(p.W_h.data @ xv + p.U_h.data @ rh + p.b_h.data)
    h_new = (1.0 - z) * hv + z * hc

    parents = (p.W_r, p.U_r, p.b_r, p.W_z, p.U_z, p.b_z, p.W_h, p.U_h, p.b_h, h_prev, x)

    def back(go):
        d_hc = go * z
        d_ah = d_hc * (1.0 - hc * hc)
        d_rh = p.U_h.data.T @ d_ah
        d_az = (go * (hc - hv)) * z * (1.0 - z)
        d_ar = (d_rh * hv) * r * (1.0 - r)
        g_h = go * (1.0 - z) + d_rh * r + p.U_z.data.T @ d_az + p.U_r.data.T @ d_ar
        g_x = None
        if x.requires_grad:
            g_x = p.W_h.data.T @ d_ah + p.W_z.data.T @ d_az + p.W_r.data.T @ d_ar
        return (
            np.outer(d_ar, xv) if p.W_r.requires_grad else None,
            np.outer(d_ar, hv) if p.U_r.requires_grad else None,
            d_ar if p.b_r.requires_grad else None,
            np.outer(d_az, xv) if p.W_z.requires_grad else None,
            np.outer(d_az, hv) if p.U_z.requires_grad else None,
            d_az if p.b_z.requires_grad else None,
            np.outer(d_ah, xv) if p.W_h.requires_grad else None,
            np.outer(d_ah, rh) if p.U_h.requires_grad else None,
            d_ah if p.b_h.requires_grad else None,
            g_h if h_prev.requires_grad else None,
            g_x,
        )

    return ad.make_node(h_new, parents, back)


def _direction_states(x_cols: list[Tensor], p: GruDirectionParams, reverse: bool) -> list[Tensor]:
    d = p.U_r.shape[0]
    h = Tensor(np.zeros(d, dtype=p.U_r.dtype))
    order = range(len(x_cols) - 1, -1, -1) if reverse else range(len(x_cols))
    states: dict[int, Tensor] = {}
    for t in order:
        h = gru_cell(x_cols[t], h, p)
        states[t] = h
    return [states[t] for t in range(len(x_cols))]


def _split_columns(x) -> list[Tensor]:
    if isinstance(x, Tensor):
        data = x.data
    else:
        data = np.asarray(x)
    if data.ndim != 2:
        raise DimensionError(f"expected a (D, M) matrix of word vectors, got shape {data.shape}")
    if data.shape[1] == 0:
        raise EmptySentenceError("sentence has no tokens")
    return [Tensor(np.ascontiguousarray(data[:, t])) for t in range(data.shape[1])]


def bigru_forward(x, p: BiGruParams) -> Tensor:
    """Hidden-state matrix H (2d, M); column t stacks both directions' states at t."""
    cols = _split_columns(x)
    f_states = _direction_states(cols, p.fwd, reverse=False)
    b_states = _direction_states(cols, p.bwd, reverse=True)
    columns = [ad.concat([f_states[t], b_states[t]]) for t in range(len(cols))]
    return ad.transpose(ad.stack_rows(columns))


def encode_f_train(x, p: BiGruParams, last_mode: str = "per_direction") -> Tensor:
    """Training representation of the GRU view (the last-step state)."""
    if last_mode not in LAST_MODES:
        raise UsageError(f"unknown last_mode {last_mode!r}, expected one of {LAST_MODES}")
    cols = _split_columns(x)
    f_states = _direction_states(cols, p.fwd, reverse=False)
    b_states = _direction_states(cols, p.bwd, reverse=True)
    if last_mode == "per_direction":
        return ad.concat([f_states[-1], b_states[0]])
    return ad.concat([f_states[-1], b_states[-1]])


def project_tokens(x, lin: LinearParams) -> Tensor:
    """Per-token projections W @ X, shape (2d, M)."""
    if not isinstance(x, Tensor):
        x = Tensor(x)
    if x.ndim != 2:
        raise DimensionError(f"expected a (D, M) matrix, got shape {x.shape}")
    if x.shape[1] == 0:
        raise EmptySentenceError("sentence has no tokens")
    return ad.matmul(lin.W, x)


def encode_g(x, lin: LinearParams) -> Tensor:
    """Linear view: mean over tokens of W @ x_j (no bias)."""
    return ad.tmean(project_tokens(x, lin), axis=1)


# ---------------------------------------------------------------------
# pooling and composition (test-time paths, plain numpy)
# ---------------------------------------------------------------------


def pool(cols: np.ndarray, kind: str) -> np.ndarray:
    """Coordinate-wise max/mean/min over columns, or the final column."""
    cols = np.asarray(cols)
    if cols.ndim != 2 or cols.shape[1] == 0:
        raise DimensionError(f"pool expects a (k, M>=1) matrix, got shape {cols.shape}")
    if kind == "max":
        return cols.max(axis=1)
    if kind == "mean":
        return cols.mean(axis=1)
    if kind == "min":
        return cols.min(axis=1)
    if kind == "last":
        return cols[:, -1].copy()
    raise UsageError(f"unknown pooling kind {kind!r}, expected one of {POOL_KINDS}")


@dataclass
class EncodedViews:
    """Everything both views produce for one sentence (numpy values)."""

    H: np.ndarray  # (2d, M) GRU hidden states
    z_f: np.ndarray  # (2d,) GRU last-step representation
    z_g: np.ndarray  # (2d,) linear mean representation
    P: np.ndarray  # (2d, M) per-token projections W_g X


def compose_f(H: np.ndarray, z_f: np.ndarray, phase: str) -> np.ndarray:
    if phase == "train":
        return z_f
    if phase == "supervised":
        # z_f carries the configured last-step convention.
        return np.concatenate([pool(H, "max"), pool(H, "mean"), pool(H, "min"), z_f])
    if phase == "unsupervised":
        return pool(H, "mean")
    raise UsageError(f"unknown phase {phase!r}")


def compose_g(P: np.ndarray, phase: str) -> np.ndarray:
    if phase == "train":
        return pool(P, "mean")
    if phase == "supervised":
        return np.concatenate([pool(P, "max"), pool(P, "mean"), pool(P, "min")])
    if phase == "unsupervised":
        return pool(P, "mean")
    raise UsageError(f"unknown phase {phase!r}")


def compose_representation(views: EncodedViews, phase: str, which: str) -> np.ndarray:
    """Phase-specific single-view representation.

    train: f -> z_f, g -> mean(P). supervised: f -> [max;mean;min;last](H)
    of length 8d, g -> [max;mean;min](P) of length 6d. unsupervised:
    f -> mean(H), g -> mean(P), each length 2d.
    """
    if which == "f":
        return compose_f(views.H, views.z_f, phase)
    if which == "g":
        return compose_g(views.P, phase)
    raise UsageError(f"unknown view {which!r}, expected 'f' or 'g'")


# ---------------------------------------------------------------------
# parameter accounting
# ---------------------------------------------------------------------


def parameter_count(d: int) -> int:
    """Headline parameter count 6*d*d*2 + 300*2d = 12d^2 + 600d.

    This is the conventional accounting for the architecture (recurrent
    weights of both directions plus the linear projection against
    300-dimensional word vectors); `exact_parameter_count` reports what a
    built model actually stores, which also includes the input weights,
    biases and the temperature.
    """
    if d < 1:
        raise UsageError(f"d must be >= 1, got {d}")
    return 12 * d * d + 600 * d


def exact_parameter_count(params: dict[str, Tensor]) -> int:
    return sum(int(p.data.size) for p in params.values())
