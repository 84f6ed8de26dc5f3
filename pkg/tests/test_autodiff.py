import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mvembed import autodiff as ad
from mvembed.errors import DegenerateVectorError, DimensionError, UsageError

from conftest import rel_err


# ---------------------------------------------------------------------
# matmul
# ---------------------------------------------------------------------


def test_matmul_identity():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    out = ad.matmul(ad.tensor(np.eye(2)), ad.tensor(a))
    np.testing.assert_array_equal(out.data, a)


def test_matmul_analytic():
    out = ad.matmul(ad.tensor([[1.0, 0.0]]), ad.tensor([[5.0], [7.0]]))
    np.testing.assert_array_equal(out.data, [[5.0]])


def test_matmul_against_triple_loop_oracle(rng):
    a = rng.normal(size=(3, 4))
    b = rng.normal(size=(4, 2))
    out = ad.matmul(ad.tensor(a), ad.tensor(b)).data
    expect = np.zeros((3, 2))
    for i in range(3):
        for j in range(2):
            for l in range(4):
                expect[i, j] += a[i, l] * b[l, j]
    np.testing.assert_allclose(out, expect, atol=1e-12)


def test_matmul_shape_mismatch():
    with pytest.raises(DimensionError):
        ad.matmul(ad.tensor(np.ones((2, 3))), ad.tensor(np.ones((2, 3))))


# ---------------------------------------------------------------------
# cosine / normalize
# ---------------------------------------------------------------------


def test_cosine_self_is_one(rng):
    for _ in range(5):
        v = rng.normal(size=6)
        assert float(ad.cosine(v, v)) == pytest.approx(1.0, abs=1e-12)


def test_cosine_orthogonal():
    assert float(ad.cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0]))) == 0.0


def test_cosine_analytic_diagonal():
    got = float(ad.cosine(np.array([1.0, 0.0]), np.array([1.0, 1.0])))
    assert got == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-15)


def test_cosine_zero_vector_errors():
    with pytest.raises(DegenerateVectorError):
        ad.cosine(np.zeros(3), np.ones(3))


def test_cosine_positive_scale_invariance(rng):
    for _ in range(10):
        u = rng.normal(size=5)
        v = rng.normal(size=5)
        base = float(ad.cosine(u, v))
        scaled = float(ad.cosine(2.75 * u, 0.015 * v))
        assert scaled == pytest.approx(base, abs=1e-12)
        assert -1.0 <= base <= 1.0


def test_l2_normalize_analytic():
    np.testing.assert_allclose(ad.l2_normalize(np.array([3.0, 4.0])).data, [0.6, 0.8])


def test_l2_normalize_idempotent_and_unit(rng):
    v = rng.normal(size=9)
    once = ad.l2_normalize(v).data
    twice = ad.l2_normalize(once).data
    assert abs(np.linalg.norm(once) - 1.0) < 1e-12
    np.testing.assert_allclose(twice, once, atol=1e-15)


def test_l2_normalize_zero_errors():
    with pytest.raises(DegenerateVectorError):
        ad.l2_normalize(np.zeros(4))


# ---------------------------------------------------------------------
# backward: basic semantics
# ---------------------------------------------------------------------


def test_backward_sum_gives_ones():
    w = ad.parameter(np.arange(6, dtype=np.float64).reshape(2, 3))
    loss = ad.tsum(w)
    ad.backward(loss)
    np.testing.assert_array_equal(w.grad, np.ones((2, 3)))


def test_backward_cosine_matches_finite_differences(rng):
    w = ad.parameter(rng.normal(size=(4, 3)))
    x = ad.tensor(rng.normal(size=3))
    y = ad.tensor(rng.normal(size=4))
    loss = ad.cosine(ad.matmul(w, x), y)
    ad.backward(loss)

    def f(wv):
        with ad.no_grad():
            return float(ad.cosine(ad.matmul(ad.tensor(wv), x), y).data)

    fd = ad.finite_diff_grad(f, w.data.copy())
    assert rel_err(w.grad, fd) < 1e-5


def test_disconnected_parameter_gets_zero_gradient():
    w = ad.parameter(np.ones(3), name="w")
    tau = ad.parameter(np.asarray(2.0), name="tau")
    loss = ad.tsum(w)
    ad.backward(loss)
    grads = ad.collect_grads({"w": w, "tau": tau})
    np.testing.assert_array_equal(grads["tau"], 0.0)
    np.testing.assert_array_equal(grads["w"], np.ones(3))


def test_backward_requires_scalar():
    w = ad.parameter(np.ones(3))
    with pytest.raises(DimensionError):
        ad.backward(ad.mul(w, w))


def test_no_grad_blocks_recording():
    w = ad.parameter(np.ones(3))
    with ad.no_grad():
        out = ad.tsum(ad.mul(w, w))
    assert not out.requires_grad
    ad.backward(ad.tsum(ad.mul(w, w)))
    assert w.grad is not None


# ---------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------


def test_finite_diff_square():
    g = ad.finite_diff_grad(lambda x: float(x**2), np.array(3.0))
    assert float(g) == pytest.approx(6.0, abs=1e-6)


def test_finite_diff_constant():
    g = ad.finite_diff_grad(lambda x: 1.25, np.ones(4))
    np.testing.assert_array_equal(g, np.zeros(4))


def test_finite_diff_rejects_bad_h():
    with pytest.raises(UsageError):
        ad.finite_diff_grad(lambda x: float(x), np.array(1.0), h=0.0)


# ---------------------------------------------------------------------
# per-op gradient battery: every differentiable op vs the oracle
# ---------------------------------------------------------------------


def _scalarize(t):
    # Deterministic non-constant weighting so no op's test collapses to a
    # constant (e.g. row-normalized outputs have constant sum of squares).
    w = np.cos(np.arange(t.size, dtype=np.float64)).reshape(t.shape) + 0.25
    return ad.tsum(ad.mul(t, ad.tensor(w)))


OPS = {
    "add": lambda a, b: ad.add(a, b),
    "add_broadcast": lambda a, b: ad.add(a, ad.reshape(ad.tsum(b, axis=1), (a.shape[0], 1))),
    "sub": lambda a, b: ad.sub(a, b),
    "mul": lambda a, b: ad.mul(a, b),
    "div": lambda a, b: ad.div(a, ad.add(ad.mul(b, b), 1.0)),
    "neg": lambda a, b: ad.neg(a),
    "matmul": lambda a, b: ad.matmul(a, ad.transpose(b)),
    "matvec": lambda a, b: ad.matmul(a, ad.gather(ad.reshape(b, (b.size,)), np.arange(a.shape[1]))),
    "transpose": lambda a, b: ad.transpose(a),
    "reshape": lambda a, b: ad.reshape(a, (a.size,)),
    "exp": lambda a, b: ad.texp(a),
    "log": lambda a, b: ad.tlog(ad.add(ad.mul(a, a), 0.5)),
    "sqrt": lambda a, b: ad.tsqrt(ad.add(ad.mul(a, a), 0.5)),
    "tanh": lambda a, b: ad.ttanh(a),
    "sigmoid": lambda a, b: ad.tsigmoid(a),
    "sum_axis0": lambda a, b: ad.tsum(a, axis=0),
    "sum_axis1": lambda a, b: ad.tsum(a, axis=1),
    "mean_all": lambda a, b: ad.tmean(a),
    "mean_axis1": lambda a, b: ad.tmean(a, axis=1),
    "concat": lambda a, b: ad.concat([a, b], axis=0),
    "normalize_rows": lambda a, b: ad.normalize_rows(a),
    "take_pairs": lambda a, b: ad.take_pairs(a, np.array([0, 1, 1, 2]), np.array([1, 0, 2, 2])),
}


@pytest.mark.parametrize("name", sorted(OPS))
@pytest.mark.parametrize("seed", range(10))
def test_op_gradient_matches_finite_differences(name, seed):
    rng = np.random.default_rng(1000 + seed)
    fn = OPS[name]
    a0 = rng.normal(size=(3, 4))
    b0 = rng.normal(size=(3, 4))

    a = ad.parameter(a0)
    b = ad.tensor(b0)
    loss = _scalarize(fn(a, b))
    ad.backward(loss)

    def f(av):
        with ad.no_grad():
            return float(_scalarize(fn(ad.tensor(av), ad.tensor(b0))).data)

    fd = ad.finite_diff_grad(f, a0.copy())
    assert rel_err(a.grad, fd) < 1e-5


def test_stack_rows_and_gather_gradients(rng):
    vs = [ad.parameter(rng.normal(size=4)) for _ in range(3)]
    loss = _scalarize(ad.gather(ad.reshape(ad.stack_rows(vs), (12,)), np.array([0, 5, 5, 11])))
    ad.backward(loss)
    for i, v in enumerate(vs):
        def f(val, i=i):
            with ad.no_grad():
                parts = [ad.tensor(val) if j == i else ad.tensor(vs[j].data) for j in range(3)]
                return float(
                    _scalarize(
                        ad.gather(ad.reshape(ad.stack_rows(parts), (12,)), np.array([0, 5, 5, 11]))
                    ).data
                )

        fd = ad.finite_diff_grad(f, v.data.copy())
        got = v.grad if v.grad is not None else np.zeros_like(v.data)
        assert rel_err(got, fd) < 1e-5 or (np.allclose(got, 0) and np.allclose(fd, 0, atol=1e-9))


def test_dot_gradient(rng):
    u = ad.parameter(rng.normal(size=5))
    v = ad.tensor(rng.normal(size=5))
    loss = ad.dot(u, v)
    ad.backward(loss)
    np.testing.assert_allclose(u.grad, v.data, atol=1e-15)


# ---------------------------------------------------------------------
# determinism and dtype
# ---------------------------------------------------------------------


def test_backward_deterministic(rng):
    a0 = rng.normal(size=(4, 4))

    def once():
        a = ad.parameter(a0.copy())
        loss = ad.tsum(ad.texp(ad.mul(a, ad.ttanh(a))))
        ad.backward(loss)
        return a.grad.copy()

    g1, g2 = once(), once()
    np.testing.assert_array_equal(g1, g2)


def test_float32_graphs_stay_float32():
    a = ad.parameter(np.ones((2, 2), dtype=np.float32))
    out = ad.mul(ad.add(a, 1.0), 0.5)
    assert out.dtype == np.float32


@given(st.floats(min_value=-30, max_value=30))
def test_sigmoid_stable_and_bounded(x):
    val = float(ad.sigmoid(np.array(x)))
    assert 0.0 < val < 1.0
    assert val == pytest.approx(1.0 / (1.0 + math.exp(-x)), rel=1e-12)
