"""Adam with bias correction, global-norm gradient clipping, He init.

Gradient dicts ("grad state") are keyed by parameter name and aligned in
shape with the parameters they belong to.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor
from .errors import DimensionError, NumericError, UsageError

__all__ = ["AdamState", "adam_step", "clip_global_norm", "he_init"]


@dataclass
class AdamState:
    """First/second moment accumulators plus the shared step counter."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: dict[str, Tensor]) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p.data) for k, p in params.items()},
            v={k: np.zeros_like(p.data) for k, p in params.items()},
        )


def adam_step(
    params: dict[str, Tensor],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> None:
    """One Adam update in place: m,v moving averages, bias correction,
    p -= lr * m_hat / (sqrt(v_hat) + eps)."""
    if lr <= 0:
        raise UsageError(f"learning rate must be positive, got {lr}")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    mc = 1.0 - b1**state.t
    vc = 1.0 - b2**state.t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.data.shape:
            raise DimensionError(f"gradient shape {g.shape} != parameter shape {p.data.shape} for {name!r}")
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for parameter {name!r}")
        m = state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        v = state.v[name] = b2 * state.v[name] + (1.0 - b2) * (g * g)
        p.data = p.data - lr * (m / mc) / (np.sqrt(v / vc) + state.eps)


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> dict[str, np.ndarray]:
    """Scale all gradients by max_norm/g when the global L2 norm g exceeds
    max_norm; below the threshold they pass through untouched."""
    if max_norm <= 0:
        raise UsageError(f"max_norm must be positive, got {max_norm}")
    total = 0.0
    for g in grads.values():
        total += float((g * g).sum())
    gnorm = float(np.sqrt(total))
    if gnorm <= max_norm:
        return grads
    scale = max_norm / gnorm
    return {name: g * scale for name, g in grads.items()}


def he_init(shape, fan_in: int, rng: np.random.Generator, dtype=np.float64) -> np.ndarray:
    """Zero-mean normal entries with variance 2/fan_in."""
    if fan_in < 1:
        raise UsageError(f"fan_in must be >= 1, got {fan_in}")
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape).astype(dtype, copy=False)
