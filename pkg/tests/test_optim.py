"""Adam, gradient clipping, and the cosine schedule against scripted traces."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from draftkit.optim import AdamState, LrSchedule, adam_step, clip_global_norm, cosine_lr
from draftkit.tensor import Tensor


def scalar_adam_reference(theta, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    """Independent plain-python Adam used as the comparison trace."""
    m = v = 0.0
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mhat = m / (1 - b1**t)
        vhat = v / (1 - b2**t)
        theta -= lr * mhat / (math.sqrt(vhat) + eps)
    return theta


def test_adam_first_step_magnitude():
    # theta=1, g=1, lr=1e-3: bias correction makes the first update lr*g/(|g|+eps)
    p = Tensor(np.array([1.0]), requires_grad=True)
    p.grad = np.array([1.0])
    state = AdamState()
    adam_step({"p": p}, state, lr=1e-3)
    expected = 1.0 - 1e-3 * (1.0 / (1.0 + 1e-8))
    assert p.data[0] == pytest.approx(expected, abs=1e-12)
    assert state.step == 1


def test_adam_zero_gradient_leaves_params_unchanged():
    p = Tensor(np.array([0.3, -0.7]), requires_grad=True)
    before = p.data.copy()
    state = AdamState()
    adam_step({"p": p}, state, lr=1e-2)  # no grad buffer at all
    np.testing.assert_array_equal(p.data, before)
    p.grad = np.zeros(2)
    adam_step({"p": p}, state, lr=1e-2)
    np.testing.assert_array_equal(p.data, before)
    assert state.step == 2


def test_adam_two_steps_match_scalar_trace():
    p = Tensor(np.array([0.5]), requires_grad=True)
    state = AdamState()
    for _ in range(2):
        p.grad = np.array([0.25])
        adam_step({"p": p}, state, lr=1e-3)
        p.zero_grad()
    expected = scalar_adam_reference(0.5, [0.25, 0.25], lr=1e-3)
    assert p.data[0] == pytest.approx(expected, abs=1e-7)


def test_adam_longer_trace_matches_reference():
    grads = [0.8, -0.3, 0.1, 0.0, 2.0, -1.5]
    p = Tensor(np.array([2.0]), requires_grad=True)
    state = AdamState()
    for g in grads:
        p.grad = np.array([g])
        adam_step({"p": p}, state, lr=3e-3)
        p.zero_grad()
    assert p.data[0] == pytest.approx(scalar_adam_reference(2.0, grads, 3e-3), abs=1e-7)


def test_adam_nonfinite_gradient_is_hard_error():
    p = Tensor(np.array([1.0]), requires_grad=True)
    p.grad = np.array([np.nan])
    with pytest.raises(FloatingPointError, match="non-finite"):
        adam_step({"p": p}, AdamState(), lr=1e-3)


def test_clip_scales_down_only_when_over_limit():
    p = Tensor(np.zeros(4), requires_grad=True)
    p.grad = np.array([10.0, 0.0, 0.0, 0.0])  # norm 10
    norm = clip_global_norm({"p": p}, max_norm=5.0)
    assert norm == pytest.approx(10.0)
    np.testing.assert_allclose(p.grad, [5.0, 0, 0, 0])

    q = Tensor(np.zeros(1), requires_grad=True)
    q.grad = np.array([3.0])  # norm 3, untouched
    norm = clip_global_norm({"q": q}, max_norm=5.0)
    assert norm == pytest.approx(3.0)
    np.testing.assert_array_equal(q.grad, [3.0])


def test_clip_is_global_across_params():
    a = Tensor(np.zeros(2), requires_grad=True)
    b = Tensor(np.zeros(2), requires_grad=True)
    a.grad = np.array([6.0, 0.0])
    b.grad = np.array([0.0, 8.0])  # joint norm 10
    clip_global_norm({"a": a, "b": b}, max_norm=5.0)
    joint = math.sqrt(float((a.grad**2).sum() + (b.grad**2).sum()))
    assert joint == pytest.approx(5.0, abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 5))
def test_property_clip_never_exceeds_limit(seed, nparams):
    rng = np.random.default_rng(seed)
    params = {}
    for i in range(nparams):
        p = Tensor(np.zeros(3), requires_grad=True)
        p.grad = rng.standard_normal(3) * rng.uniform(0, 10)
        params[f"p{i}"] = p
    before = math.sqrt(sum(float((p.grad**2).sum()) for p in params.values()))
    reported = clip_global_norm(params, max_norm=5.0)
    after = math.sqrt(sum(float((p.grad**2).sum()) for p in params.values()))
    assert reported == pytest.approx(before, rel=1e-6)
    assert after <= 5.0 + 1e-6
    assert after == pytest.approx(min(before, 5.0), rel=1e-6)


def test_cosine_schedule_endpoints_and_midpoint():
    sched = LrSchedule(initial_lr=1e-3, total_steps=1000, final_lr=0.0)
    assert cosine_lr(0, sched) == pytest.approx(1e-3)
    assert cosine_lr(500, sched) == pytest.approx(5e-4, rel=1e-9)
    assert cosine_lr(1000, sched) == 0.0
    assert cosine_lr(5000, sched) == 0.0  # clamped past the end


def test_cosine_schedule_monotone_decreasing():
    sched = LrSchedule(initial_lr=1e-3, total_steps=200, final_lr=1e-5)
    values = [cosine_lr(s, sched) for s in range(201)]
    assert all(a >= b for a, b in zip(values, values[1:]))
    assert values[-1] == pytest.approx(1e-5)


def test_negative_step_rejected():
    with pytest.raises(ValueError):
        cosine_lr(-1, LrSchedule(1e-3, 10))
