"""First-principal-component estimation and removal, plus view ensembling.

The dominant direction u of a stack of representations Z (columns are
vectors) is estimated by power iteration on C = Z Z^T, or on the far
smaller Gram matrix Z^T Z when the batch holds fewer vectors than
dimensions; each vector is then replaced by z - u (u^T z). No mean is
subtracted anywhere: the covariance is the raw second moment, matching
the removal formula.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateMatrixError,
    DegenerateVectorError,
    DimensionError,
    InsufficientDataError,
    UsageError,
)

__all__ = [
    "PcEstimate",
    "power_iteration",
    "top_pc_via_gram",
    "remove_pc",
    "postprocess_batch",
    "ensemble_unsupervised",
    "ensemble_supervised",
]

DEFAULT_PC_ITERS = 20

# Successive-iterate change below this stops power iteration early.
_CONVERGE_TOL = 1e-10


@dataclass(frozen=True)
class PcEstimate:
    """A fitted top principal direction: unit vector, iterations actually
    run, whether the Gram trick was used, and the population size."""

    u: np.ndarray
    iterations: int
    via_gram: bool
    fitted_on: int


def _power_iterate(c: np.ndarray, iters: int, rng) -> tuple[np.ndarray, int]:
    """Multiply-and-normalise loop; returns (unit vector, iterations run)
    where early stopping on a converged iterate can end before ``iters``."""
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise DimensionError(f"power_iteration expects a square matrix, got shape {c.shape}")
    if iters < 1:
        raise UsageError(f"iteration count must be >= 1, got {iters}")
    scale = max(1.0, float(np.abs(c).max()))
    if float(np.abs(c - c.T).max()) > 1e-10 * scale:
        raise UsageError("power_iteration expects a symmetric matrix")
    if rng is None:
        rng = np.random.default_rng(0)
    u = rng.normal(size=c.shape[0])
    u /= np.linalg.norm(u)
    used = 0
    for _ in range(iters):
        w = c @ u
        n = np.linalg.norm(w)
        if n == 0.0:
            raise DegenerateMatrixError("power iteration hit the matrix null space")
        w /= n
        used += 1
        converged = np.linalg.norm(w - u) < _CONVERGE_TOL
        u = w
        if converged:
            break
    return u, used


def power_iteration(c: np.ndarray, iters: int = DEFAULT_PC_ITERS, rng=None) -> np.ndarray:
    """Dominant eigenvector of a symmetric PSD matrix via repeated
    multiply-and-normalise from a random unit start (sign arbitrary)."""
    u, _ = _power_iterate(c, iters, rng)
    return u


def _gram_top_pc(z: np.ndarray, iters: int, rng) -> tuple[np.ndarray, int]:
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2:
        raise DimensionError(f"expected a (k, n) matrix, got shape {z.shape}")
    gram = z.T @ z
    gram = 0.5 * (gram + gram.T)
    v, used = _power_iterate(gram, iters, rng)
    u = z @ v
    n = np.linalg.norm(u)
    if n == 0.0:
        raise DegenerateMatrixError("Gram eigenvector maps to zero; matrix is degenerate")
    return u / n, used


def top_pc_via_gram(z: np.ndarray, iters: int = DEFAULT_PC_ITERS, rng=None) -> np.ndarray:
    """Top principal direction of the columns of z (k, n) computed through
    the n-by-n Gram matrix z^T z: run power iteration there, then map the
    eigenvector back with u = Z v / ||Z v||."""
    u, _ = _gram_top_pc(z, iters, rng)
    return u


def _snap_threshold(dims: int, dtype) -> float:
    # Residual of one re-orthogonalisation round is ~dims*eps relative to
    # the column norm; 32x headroom keeps the skip test robust.
    return 32.0 * dims * float(np.finfo(dtype).eps)


def remove_pc(z: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Project the direction u out of every column: z_i <- z_i - u (u^T z_i).

    Two numerical refinements make the operation exactly idempotent in
    floating point: columns whose coefficient along u is already below
    rounding noise pass through bit-for-bit unchanged, and processed
    columns get a second projection round (and collapse to exact zeros
    when nothing beyond rounding noise remains). Column norms never grow
    beyond rounding.
    """
    z = np.asarray(z)
    u = np.asarray(u, dtype=z.dtype)
    if z.ndim != 2 or u.ndim != 1 or z.shape[0] != u.shape[0]:
        raise DimensionError(f"shape mismatch: z {z.shape}, u {u.shape}")
    unit_tol = max(1e-8, 64.0 * u.shape[0] * float(np.finfo(z.dtype).eps))
    norm_u = float(np.linalg.norm(u))
    if abs(norm_u - 1.0) > unit_tol:
        raise UsageError("remove_pc expects a unit direction vector")
    u = u / norm_u
    tol = _snap_threshold(z.shape[0], z.dtype)
    norms = np.linalg.norm(z, axis=0)
    coef = u @ z
    keep = np.abs(coef) <= tol * norms
    out = z.copy()
    todo = ~keep
    if np.any(todo):
        w = z[:, todo] - np.outer(u, coef[todo])
        w -= np.outer(u, u @ w)
        w[:, np.linalg.norm(w, axis=0) <= tol * norms[todo]] = 0.0
        out[:, todo] = w
    return out


def postprocess_batch(
    z: np.ndarray, iters: int = DEFAULT_PC_ITERS, rng=None
) -> tuple[np.ndarray, PcEstimate]:
    """Fit the top principal direction on this batch of column vectors and
    remove it. The Gram trick is used whenever there are fewer vectors
    than dimensions."""
    z = np.asarray(z)
    if z.ndim != 2:
        raise DimensionError(f"expected a (k, n) matrix, got shape {z.shape}")
    k, n = z.shape
    if n < 2:
        raise InsufficientDataError(f"need at least 2 vectors to fit a component, got {n}")
    via_gram = n < k
    if not np.any(z):
        # A zero population has no principal direction and nothing to
        # remove; report an arbitrary axis so the estimate stays unit.
        u = np.zeros(k)
        u[0] = 1.0
        return z.copy(), PcEstimate(u=u, iterations=0, via_gram=via_gram, fitted_on=n)
    if via_gram:
        u, used = _gram_top_pc(z, iters, rng)
    else:
        c = z @ z.T
        c = 0.5 * (c + c.T)
        u, used = _power_iterate(c, iters, rng)
    estimate = PcEstimate(u=u, iterations=used, via_gram=via_gram, fitted_on=n)
    return remove_pc(z, u.astype(z.dtype, copy=False)), estimate


# ---------------------------------------------------------------------
# ensembling
# ---------------------------------------------------------------------


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0.0:
        raise DegenerateVectorError("cannot normalize a zero vector")
    return v / n


def ensemble_unsupervised(z_f: np.ndarray, z_g: np.ndarray) -> np.ndarray:
    """Similarity-task representation: sum of the individually normalised
    view vectors (both already component-removed)."""
    z_f = np.asarray(z_f)
    z_g = np.asarray(z_g)
    if z_f.shape != z_g.shape or z_f.ndim != 1:
        raise DimensionError(f"expected equal-length vectors, got {z_f.shape}, {z_g.shape}")
    return _unit(z_f) + _unit(z_g)


def ensemble_supervised(feat_f: np.ndarray, feat_g: np.ndarray) -> np.ndarray:
    """Feature-extraction representation: concatenation [feat_f ; feat_g]
    of the 8d GRU-view block and the 6d linear-view block (each part
    already post-processed and normalised on its own)."""
    feat_f = np.asarray(feat_f)
    feat_g = np.asarray(feat_g)
    if feat_f.ndim != 1 or feat_g.ndim != 1:
        raise DimensionError("expected feature vectors")
    if feat_f.size % 8 != 0 or feat_g.size != (feat_f.size // 8) * 6:
        raise DimensionError(
            f"expected 8d- and 6d-length parts, got {feat_f.size} and {feat_g.size}"
        )
    return np.concatenate([feat_f, feat_g])
