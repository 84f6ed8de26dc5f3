"""Reverse-mode automatic differentiation over dense numpy arrays.

A forward pass built from the operations below records a DAG of `Tensor`
nodes; `backward(loss)` then pushes exact gradients of a scalar loss to
every node created with ``requires_grad=True``. The tape is rebuilt on
every forward pass. Inputs wrapped as plain constants (frozen word
vectors, fitted principal directions) never receive gradients.

Values are row-major numpy arrays, float64 by default with float32
selectable at creation; python scalars mixed into an expression adopt the
other operand's dtype so a float32 graph stays float32. Tensors are
treated as immutable once produced and are safe to share read-only across
threads; the ``no_grad`` flag is module-global, so only one thread should
toggle it (workers spawned inside an active ``no_grad`` block are fine).
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateVectorError, DimensionError, NumericError, UsageError

__all__ = [
    "Tensor",
    "tensor",
    "parameter",
    "no_grad",
    "backward",
    "collect_grads",
    "zero_grads",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "matmul",
    "transpose",
    "reshape",
    "texp",
    "tlog",
    "tsqrt",
    "ttanh",
    "tsigmoid",
    "tsum",
    "tmean",
    "concat",
    "stack_rows",
    "gather",
    "take_pairs",
    "normalize_rows",
    "dot",
    "cosine",
    "l2_normalize",
    "sigmoid",
    "finite_diff_grad",
]

_FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))

_grad_enabled = True


class no_grad:
    """Context manager that disables graph recording (value-only forward)."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


def _as_value(data):
    arr = np.asarray(data)
    if arr.dtype not in _FLOAT_DTYPES:
        arr = arr.astype(np.float64)
    return arr


class Tensor:
    """One node of the computation DAG: a numpy value plus gradient plumbing."""

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = _as_value(data)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._parents = ()
        self._backward = None

    # -- introspection -------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    @property
    def ndim(self):
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def __float__(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad}{tag})"

    # -- operators -----------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    # -- method-style ops ----------------------------------------------
    def sum(self, axis=None):
        return tsum(self, axis)

    def mean(self, axis=None):
        return tmean(self, axis)

    def exp(self):
        return texp(self)

    def log(self):
        return tlog(self)

    def sqrt(self):
        return tsqrt(self)

    def tanh(self):
        return ttanh(self)

    def sigmoid(self):
        return tsigmoid(self)

    def transpose(self):
        return transpose(self)

    def reshape(self, shape):
        return reshape(self, shape)

    def backward(self):
        backward(self)

    def zero_grad(self):
        self.grad = None


def tensor(data, name=None) -> Tensor:
    """Wrap data as a constant (no gradient) tensor."""
    return Tensor(data, requires_grad=False, name=name)


def parameter(data, name=None) -> Tensor:
    """Wrap data as a trainable parameter tensor."""
    return Tensor(data, requires_grad=True, name=name)


# ---------------------------------------------------------------------
# graph construction helpers
# ---------------------------------------------------------------------


def make_node(data, parents: Sequence[Tensor], backward_fn: Callable) -> Tensor:
    """Build a result tensor, attaching the backward closure only when
    recording is on and some parent needs a gradient.

    ``backward_fn(grad_out)`` must return one contribution per parent
    (``None`` for parents that need no gradient). Custom fused operations
    (e.g. a GRU cell) register themselves through this hook.
    """
    if _grad_enabled and any(p.requires_grad for p in parents):
        out = Tensor(data, requires_grad=True)
        out._parents = tuple(parents)
        out._backward = backward_fn
        return out
    return Tensor(data)


def _coerce(x, like: Tensor) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=like.data.dtype))


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum a broadcast gradient back down to the original operand shape."""
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ---------------------------------------------------------------------
# elementwise arithmetic
# ---------------------------------------------------------------------


def add(a, b) -> Tensor:
    if not isinstance(a, Tensor):
        a = _coerce(a, b)
    b = _coerce(b, a)
    data = a.data + b.data

    def back(go):
        return _unbroadcast(go, a.data.shape), _unbroadcast(go, b.data.shape)

    return make_node(data, (a, b), back)


def sub(a, b) -> Tensor:
    if not isinstance(a, Tensor):
        a = _coerce(a, b)
    b = _coerce(b, a)
    data = a.data - b.data

    def back(go):
        return _unbroadcast(go, a.data.shape), _unbroadcast(-go, b.data.shape)

    return make_node(data, (a, b), back)


def mul(a, b) -> Tensor:
    if not isinstance(a, Tensor):
        a = _coerce(a, b)
    b = _coerce(b, a)
    data = a.data * b.data

    def back(go):
        ga = _unbroadcast(go * b.data, a.data.shape) if a.requires_grad else None
        gb = _unbroadcast(go * a.data, b.data.shape) if b.requires_grad else None
        return ga, gb

    return make_node(data, (a, b), back)


def div(a, b) -> Tensor:
    if not isinstance(a, Tensor):
        a = _coerce(a, b)
    b = _coerce(b, a)
    data = a.data / b.data

    def back(go):
        ga = _unbroadcast(go / b.data, a.data.shape) if a.requires_grad else None
        gb = _unbroadcast(-go * data / b.data, b.data.shape) if b.requires_grad else None
        return ga, gb

    return make_node(data, (a, b), back)


def neg(a: Tensor) -> Tensor:
    def back(go):
        return (-go,)

    return make_node(-a.data, (a,), back)


# ---------------------------------------------------------------------
# linear algebra
# ---------------------------------------------------------------------


def matmul(a, b) -> Tensor:
    """Matrix product: (m,k)@(k,n) -> (m,n) or (m,k)@(k,) -> (m,)."""
    if not isinstance(a, Tensor):
        a = Tensor(a)
    if not isinstance(b, Tensor):
        b = Tensor(b)
    if a.ndim != 2 or b.ndim not in (1, 2):
        raise DimensionError(
            f"matmul supports (m,k)@(k,n) and (m,k)@(k,), got {a.shape} @ {b.shape}"
        )
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"inner extents differ: {a.shape} @ {b.shape}")
    data = a.data @ b.data

    if b.ndim == 2:

        def back(go):
            ga = go @ b.data.T if a.requires_grad else None
            gb = a.data.T @ go if b.requires_grad else None
            return ga, gb

    else:

        def back(go):
            ga = np.outer(go, b.data) if a.requires_grad else None
            gb = a.data.T @ go if b.requires_grad else None
            return ga, gb

    return make_node(data, (a, b), back)


def transpose(a: Tensor) -> Tensor:
    if a.ndim != 2:
        raise DimensionError(f"transpose expects a matrix, got shape {a.shape}")

    def back(go):
        return (go.T,)

    return make_node(a.data.T, (a,), back)


def reshape(a: Tensor, shape) -> Tensor:
    old = a.data.shape

    def back(go):
        return (go.reshape(old),)

    return make_node(a.data.reshape(shape), (a,), back)


# ---------------------------------------------------------------------
# nonlinearities
# ---------------------------------------------------------------------


def texp(a: Tensor) -> Tensor:
    data = np.exp(a.data)

    def back(go):
        return (go * data,)

    return make_node(data, (a,), back)


def tlog(a: Tensor) -> Tensor:
    data = np.log(a.data)

    def back(go):
        return (go / a.data,)

    return make_node(data, (a,), back)


def tsqrt(a: Tensor) -> Tensor:
    data = np.sqrt(a.data)

    def back(go):
        return (go * 0.5 / data,)

    return make_node(data, (a,), back)


def ttanh(a: Tensor) -> Tensor:
    data = np.tanh(a.data)

    def back(go):
        return (go * (1.0 - data * data),)

    return make_node(data, (a,), back)


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function, branch form, on raw arrays."""
    x = np.asarray(x)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def tsigmoid(a: Tensor) -> Tensor:
    data = sigmoid(a.data)

    def back(go):
        return (go * data * (1.0 - data),)

    return make_node(data, (a,), back)


# ---------------------------------------------------------------------
# reductions and reshuffles
# ---------------------------------------------------------------------


def tsum(a: Tensor, axis=None) -> Tensor:
    data = a.data.sum(axis=axis)

    def back(go):
        if axis is None:
            return (np.broadcast_to(go, a.data.shape),)
        return (np.broadcast_to(np.expand_dims(go, axis), a.data.shape),)

    return make_node(data, (a,), back)


def tmean(a: Tensor, axis=None) -> Tensor:
    n = a.data.size if axis is None else a.data.shape[axis]
    data = a.data.mean(axis=axis)

    def back(go):
        if axis is None:
            return (np.broadcast_to(go / n, a.data.shape),)
        return (np.broadcast_to(np.expand_dims(go / n, axis), a.data.shape),)

    return make_node(data, (a,), back)


def concat(parts: Sequence[Tensor], axis=0) -> Tensor:
    parts = [p if isinstance(p, Tensor) else Tensor(p) for p in parts]
    data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.data.shape[axis] for p in parts]
    splits = np.cumsum(sizes)[:-1]

    def back(go):
        return tuple(np.split(go, splits, axis=axis))

    return make_node(data, tuple(parts), back)


def stack_rows(parts: Sequence[Tensor]) -> Tensor:
    """Stack length-k vectors into an (n, k) matrix, one vector per row."""
    parts = [p if isinstance(p, Tensor) else Tensor(p) for p in parts]
    data = np.stack([p.data for p in parts], axis=0)

    def back(go):
        return tuple(go[i] for i in range(len(parts)))

    return make_node(data, tuple(parts), back)


def gather(v: Tensor, idx: np.ndarray) -> Tensor:
    idx = np.asarray(idx)
    data = v.data[idx]

    def back(go):
        g = np.zeros_like(v.data)
        np.add.at(g, idx, go)
        return (g,)

    return make_node(data, (v,), back)


def take_pairs(m: Tensor, rows: np.ndarray, cols: np.ndarray) -> Tensor:
    rows = np.asarray(rows)
    cols = np.asarray(cols)
    data = m.data[rows, cols]

    def back(go):
        g = np.zeros_like(m.data)
        np.add.at(g, (rows, cols), go)
        return (g,)

    return make_node(data, (m,), back)


def normalize_rows(z: Tensor) -> Tensor:
    """Scale every row of an (n, k) matrix to unit L2 norm."""
    norms = np.sqrt((z.data * z.data).sum(axis=1))
    if np.any(norms == 0.0):
        raise DegenerateVectorError("cannot normalize a zero row")
    inv = (1.0 / norms)[:, None]
    data = z.data * inv

    def back(go):
        rowdots = (go * data).sum(axis=1, keepdims=True)
        return ((go - data * rowdots) * inv,)

    return make_node(data, (z,), back)


# ---------------------------------------------------------------------
# vector geometry
# ---------------------------------------------------------------------


def dot(u, v) -> Tensor:
    if not isinstance(u, Tensor):
        u = Tensor(u)
    if not isinstance(v, Tensor):
        v = Tensor(v)
    if u.ndim != 1 or v.ndim != 1 or u.shape != v.shape:
        raise DimensionError(f"dot expects equal-length vectors, got {u.shape}, {v.shape}")
    data = np.asarray(u.data @ v.data)

    def back(go):
        gu = go * v.data if u.requires_grad else None
        gv = go * u.data if v.requires_grad else None
        return gu, gv

    return make_node(data, (u, v), back)


def cosine(u, v) -> Tensor:
    """Cosine similarity of two nonzero vectors; value clipped to [-1, 1]."""
    if not isinstance(u, Tensor):
        u = Tensor(u)
    if not isinstance(v, Tensor):
        v = Tensor(v)
    if u.ndim != 1 or v.ndim != 1 or u.shape != v.shape:
        raise DimensionError(f"cosine expects equal-length vectors, got {u.shape}, {v.shape}")
    nu = float(np.linalg.norm(u.data))
    nv = float(np.linalg.norm(v.data))
    if nu == 0.0 or nv == 0.0:
        raise DegenerateVectorError("cosine of a zero vector is undefined")
    c = float(np.clip(u.data @ v.data / (nu * nv), -1.0, 1.0))
    data = np.asarray(c, dtype=u.data.dtype)

    def back(go):
        gu = go * (v.data / (nu * nv) - c * u.data / (nu * nu)) if u.requires_grad else None
        gv = go * (u.data / (nu * nv) - c * v.data / (nv * nv)) if v.requires_grad else None
        return gu, gv

    return make_node(data, (u, v), back)


def l2_normalize(v) -> Tensor:
    """v / ||v||; unit norm output, idempotent, errors on the zero vector."""
    if not isinstance(v, Tensor):
        v = Tensor(v)
    if v.ndim != 1:
        raise DimensionError(f"l2_normalize expects a vector, got shape {v.shape}")
    n = float(np.linalg.norm(v.data))
    if n == 0.0:
        raise DegenerateVectorError("cannot normalize the zero vector")
    data = v.data / n

    def back(go):
        return ((go - data * (data @ go)) / n,)

    return make_node(data, (v,), back)


# ---------------------------------------------------------------------
# backpropagation
# ---------------------------------------------------------------------


def _topo_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    visited: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in visited:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(node) into ``.grad`` of every recorded node.

    ``loss`` must be scalar. Nodes not connected to the loss keep
    ``grad is None``; `collect_grads` reports those as exact zeros.
    """
    if loss.size != 1:
        raise DimensionError(f"backward expects a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        return
    order = _topo_order(loss)
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward is None or node.grad is None:
            continue
        contribs = node._backward(node.grad)
        for parent, contrib in zip(node._parents, contribs):
            if contrib is None or not parent.requires_grad:
                continue
            parent.grad = contrib if parent.grad is None else parent.grad + contrib


def collect_grads(params: dict[str, Tensor]) -> dict[str, np.ndarray]:
    """Gradients aligned by name/shape with the parameters; zeros when a
    parameter is disconnected from the loss."""
    out = {}
    for name, p in params.items():
        out[name] = p.grad if p.grad is not None else np.zeros_like(p.data)
    return out


def zero_grads(params: dict[str, Tensor]) -> None:
    for p in params.values():
        p.grad = None


# ---------------------------------------------------------------------
# finite differences (oracle)
# ---------------------------------------------------------------------


def finite_diff_grad(f, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient (f(x+he_i) - f(x-he_i)) / 2h per coordinate.

    ``f`` maps an array of x's shape to a float. Kept independent of the
    reverse-mode engine on purpose: it is the oracle the engine is checked
    against.
    """
    if h <= 0:
        raise UsageError(f"finite_diff_grad requires h > 0, got {h}")
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat_x = x.ravel()
    flat_g = grad.ravel()
    for i in range(flat_x.size):
        orig = flat_x[i]
        flat_x[i] = orig + h
        fp = float(f(x))
        flat_x[i] = orig - h
        fm = float(f(x))
        flat_x[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NumericError("non-finite value during finite differencing")
        flat_g[i] = (fp - fm) / (2.0 * h)
    return grad
