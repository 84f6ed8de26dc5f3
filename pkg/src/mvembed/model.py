"""Model assembly: pairs (or singles) of view encoders plus the trainable
softmax temperature, and the sentence-level encoding façade used by
evaluation and the CLI.

View configurations: "fg" (GRU + linear, the default), "ff" and "gg"
(two independently initialised encoders of the same type), "f" and "g"
(single view).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import encoders as enc
from .autodiff import Tensor
from .errors import MissingViewError, UsageError
from .wordvec import WordTable, embed_sentence

__all__ = [
    "VIEW_CONFIGS",
    "GruView",
    "LinearView",
    "MultiViewModel",
    "build_model",
    "SentenceEncoder",
    "ViewSubsetEncoder",
]

VIEW_CONFIGS: dict[str, tuple[str, ...]] = {
    "fg": ("f", "g"),
    "ff": ("f", "f"),
    "gg": ("g", "g"),
    "f": ("f",),
    "g": ("g",),
}


class GruView:
    kind = "f"

    def __init__(self, params: enc.BiGruParams, last_mode: str = "per_direction"):
        self.params = params
        self.last_mode = last_mode

    def named(self, prefix: str) -> dict[str, Tensor]:
        return self.params.named(prefix)

    def encode_train(self, x) -> Tensor:
        return enc.encode_f_train(x, self.params, self.last_mode)

    def compose(self, x, phase: str) -> np.ndarray:
        with ad.no_grad():
            h = enc.bigru_forward(x, self.params).data
            z_f = enc.encode_f_train(x, self.params, self.last_mode).data
        return enc.compose_f(h, z_f, phase)


class LinearView:
    kind = "g"

    def __init__(self, params: enc.LinearParams):
        self.params = params

    def named(self, prefix: str) -> dict[str, Tensor]:
        return self.params.named(prefix)

    def encode_train(self, x) -> Tensor:
        return enc.encode_g(x, self.params)

    def compose(self, x, phase: str) -> np.ndarray:
        with ad.no_grad():
            p = enc.project_tokens(x, self.params).data
        return enc.compose_g(p, phase)


@dataclass
class MultiViewModel:
    view_config: str
    views: list
    tau: Tensor
    d: int
    word_dim: int
    dtype: np.dtype
    f_last_mode: str
    fix_tau: bool

    def parameters(self) -> dict[str, Tensor]:
        """All stored parameters, named, in a stable order (tau last)."""
        out: dict[str, Tensor] = {}
        for i, view in enumerate(self.views):
            out.update(view.named(f"view{i}"))
        out["tau"] = self.tau
        return out

    def trainable_parameters(self) -> dict[str, Tensor]:
        out = self.parameters()
        if self.fix_tau:
            out.pop("tau")
        return out

    def view_kinds(self) -> tuple[str, ...]:
        return tuple(v.kind for v in self.views)


def build_model(
    view_config: str,
    d: int,
    word_dim: int,
    rng: np.random.Generator,
    dtype=np.float64,
    tau_init: float = 1.0,
    f_last_mode: str = "per_direction",
    fix_tau: bool = False,
) -> MultiViewModel:
    """Initialise all encoders of a view configuration from one rng stream
    (same-type views draw separately, so "ff"/"gg" twins start distinct)."""
    if view_config not in VIEW_CONFIGS:
        raise UsageError(f"unknown view config {view_config!r}, expected one of {tuple(VIEW_CONFIGS)}")
    if d < 1 or word_dim < 1:
        raise UsageError(f"d and word_dim must be >= 1, got d={d}, word_dim={word_dim}")
    if tau_init <= 0:
        raise UsageError(f"tau_init must be positive, got {tau_init}")
    dtype = np.dtype(dtype)
    views = []
    for kind in VIEW_CONFIGS[view_config]:
        if kind == "f":
            views.append(GruView(enc.init_bigru(d, word_dim, rng, dtype), f_last_mode))
        else:
            views.append(LinearView(enc.init_linear(d, word_dim, rng, dtype)))
    tau = ad.parameter(np.asarray(tau_init, dtype=dtype), name="tau")
    return MultiViewModel(
        view_config=view_config,
        views=views,
        tau=tau,
        d=d,
        word_dim=word_dim,
        dtype=dtype,
        f_last_mode=f_last_mode,
        fix_tau=fix_tau,
    )


class SentenceEncoder:
    """Model + frozen word table: tokens in, per-view representation
    vectors out. This is the encoder protocol the evaluation kit expects."""

    def __init__(self, model: MultiViewModel, table: WordTable):
        if table.dim != model.word_dim:
            raise UsageError(
                f"word table dimension {table.dim} != model word dimension {model.word_dim}"
            )
        self.model = model
        self.table = table

    def view_vectors(self, tokens, phase: str) -> list[np.ndarray]:
        x = embed_sentence(self.table, tokens, dtype=self.model.dtype)
        return [view.compose(x, phase) for view in self.model.views]

    def require_view(self, kind: str) -> int:
        """Index of the first view of the given kind ('f' or 'g')."""
        for i, view in enumerate(self.model.views):
            if view.kind == kind:
                return i
        raise MissingViewError(
            f"model with view config {self.model.view_config!r} has no {kind!r} view"
        )


class ViewSubsetEncoder:
    """Restrict an encoder to a subset of its views (for single-view
    evaluation of multi-view checkpoints)."""

    def __init__(self, base, indices: list[int]):
        self.base = base
        self.indices = indices

    def view_vectors(self, tokens, phase: str) -> list[np.ndarray]:
        all_views = self.base.view_vectors(tokens, phase)
        return [all_views[i] for i in self.indices]
