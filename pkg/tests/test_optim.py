import numpy as np
import pytest

from mvembed import autodiff as ad
from mvembed.errors import DimensionError, NumericError, UsageError
from mvembed.optim import AdamState, adam_step, clip_global_norm, he_init


def _params(values):
    return {k: ad.parameter(np.asarray(v, dtype=np.float64)) for k, v in values.items()}


# ---------------------------------------------------------------------
# adam
# ---------------------------------------------------------------------


def test_adam_zero_gradients_leave_params_unchanged():
    params = _params({"w": [1.0, -2.0, 3.0]})
    state = AdamState.for_params(params)
    adam_step(params, {"w": np.zeros(3)}, state, lr=1e-3)
    np.testing.assert_array_equal(params["w"].data, [1.0, -2.0, 3.0])
    assert state.t == 1


def test_adam_single_step_hand_value():
    # param 0, grad 1, fresh state: m_hat = 1, v_hat = 1,
    # step = lr / (1 + eps).
    params = _params({"w": 0.0})
    state = AdamState.for_params(params)
    adam_step(params, {"w": np.asarray(1.0)}, state, lr=5e-4)
    expected = -5e-4 / (1.0 + 1e-8)
    assert float(params["w"].data) == pytest.approx(expected, abs=1e-12)


def test_adam_bit_identical_across_runs():
    def run():
        rng = np.random.default_rng(3)
        params = _params({"w": rng.normal(size=(4, 4)), "b": rng.normal(size=4)})
        state = AdamState.for_params(params)
        for step in range(25):
            grads = {k: np.sin(p.data + step) for k, p in params.items()}
            adam_step(params, grads, state, lr=2e-3)
        return {k: p.data.copy() for k, p in params.items()}

    r1, r2 = run(), run()
    for k in r1:
        np.testing.assert_array_equal(r1[k], r2[k])


def test_adam_rejects_nan_gradient():
    params = _params({"w": [1.0, 2.0]})
    state = AdamState.for_params(params)
    with pytest.raises(NumericError):
        adam_step(params, {"w": np.array([np.nan, 0.0])}, state, lr=1e-3)


def test_adam_rejects_shape_mismatch():
    params = _params({"w": [1.0, 2.0]})
    state = AdamState.for_params(params)
    with pytest.raises(DimensionError):
        adam_step(params, {"w": np.zeros(3)}, state, lr=1e-3)


def test_adam_rejects_nonpositive_lr():
    params = _params({"w": [1.0]})
    state = AdamState.for_params(params)
    with pytest.raises(UsageError):
        adam_step(params, {"w": np.zeros(1)}, state, lr=0.0)


def test_adam_step_counter_monotone():
    params = _params({"w": [0.0]})
    state = AdamState.for_params(params)
    for expected_t in (1, 2, 3):
        adam_step(params, {"w": np.asarray([0.5])}, state, lr=1e-3)
        assert state.t == expected_t


# ---------------------------------------------------------------------
# gradient clipping
# ---------------------------------------------------------------------


def test_clip_under_threshold_is_untouched():
    grads = {"w": np.array([0.3, 0.4])}  # norm 0.5
    out = clip_global_norm(grads, 1.0)
    assert out is grads


def test_clip_analytic():
    out = clip_global_norm({"w": np.array([3.0, 4.0])}, 1.0)
    np.testing.assert_allclose(out["w"], [0.6, 0.8], atol=1e-15)


def test_clip_norm_oracle(rng):
    for _ in range(10):
        grads = {
            "a": rng.normal(size=(3, 3)) * 4,
            "b": rng.normal(size=7) * 4,
        }
        pre = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
        out = clip_global_norm(grads, 2.5)
        post = np.sqrt(sum(float((g * g).sum()) for g in out.values()))
        assert post == pytest.approx(min(pre, 2.5), abs=1e-12)


def test_clip_preserves_ratios_and_never_grows(rng):
    grads = {"a": rng.normal(size=20) * 10}
    out = clip_global_norm(grads, 1.0)
    a, b = grads["a"], out["a"]
    assert np.all(np.abs(b) <= np.abs(a))
    ratio = b / a
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-12)


def test_clip_rejects_bad_max_norm():
    with pytest.raises(UsageError):
        clip_global_norm({"a": np.ones(2)}, 0.0)


# ---------------------------------------------------------------------
# He initialisation
# ---------------------------------------------------------------------


def test_he_init_sample_variance():
    rng = np.random.default_rng(2024)
    draws = he_init((100_000,), fan_in=50, rng=rng)
    target = 2.0 / 50.0
    assert abs(draws.var() - target) < 0.1 * target


def test_he_init_sample_mean():
    rng = np.random.default_rng(2024)
    n = 100_000
    draws = he_init((n,), fan_in=50, rng=rng)
    sigma = np.sqrt(2.0 / 50.0)
    assert abs(draws.mean()) < 3.0 * sigma / np.sqrt(n)


def test_he_init_deterministic_for_fixed_seed():
    a = he_init((4, 5), 5, np.random.default_rng(11))
    b = he_init((4, 5), 5, np.random.default_rng(11))
    np.testing.assert_array_equal(a, b)


def test_he_init_rejects_bad_fan_in():
    with pytest.raises(UsageError):
        he_init((2, 2), 0, np.random.default_rng(0))
