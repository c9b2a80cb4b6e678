import math
import threading

import numpy as np
import pytest
from _fd import numeric_grad, rel_err
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wpmixer.autodiff import (
    BatchNormState,
    Parameter,
    Tensor,
    batch_norm,
    concat,
    dropout,
    flatten,
    gelu,
    getitem,
    linear,
    matmul,
    no_grad,
    permute,
    reshape,
    stack,
    swapaxes,
    tensor,
)
from wpmixer.errors import ConfigError, ContractError, DimensionError, UninitializedStatsError

finite = st.floats(-2, 2, allow_nan=False)


def param(a, name="p"):
    return Parameter(np.array(a, dtype=float), name)


# -- linear ----------------------------------------------------------------

def test_linear_identity_weights():
    y = linear(tensor([1.0, 2.0]), param(np.eye(2)), param([0.0, 0.0]))
    assert np.array_equal(y.data, [1.0, 2.0])


def test_linear_hand_value():
    y = linear(tensor([1.0, 1.0]), param([[2.0], [3.0]]), param([1.0]))
    assert np.array_equal(y.data, [6.0])


def test_linear_shape_mismatch_names_both_shapes():
    with pytest.raises(DimensionError, match=r"\(3,\).*\(2, 2\)"):
        linear(tensor(np.ones(3)), param(np.eye(2)), param(np.zeros(2)))


def test_linear_input_gradient_is_weight_row_sums():
    rng = np.random.default_rng(0)
    x = Tensor(rng.standard_normal((3, 4)), requires_grad=True)
    w, b = param(rng.standard_normal((4, 5))), param(rng.standard_normal(5))
    linear(x, w, b).sum().backward()
    assert np.allclose(x.grad, np.tile(w.data.sum(axis=1), (3, 1)), atol=1e-14)
    num = numeric_grad(lambda: linear(Tensor(x.data), w, b).data.sum(), x.data)
    assert rel_err(x.grad, num) < 1e-6


def test_linear_parameter_gradients_match_fd():
    rng = np.random.default_rng(1)
    x = Tensor(rng.standard_normal((2, 3, 4)))
    w, b = param(rng.standard_normal((4, 5))), param(rng.standard_normal(5))
    target = rng.standard_normal((2, 3, 5))

    def loss():
        d = linear(x, w, b) - target
        return (d * d).mean()

    loss().backward()
    for p in (w, b):
        assert rel_err(p.grad, numeric_grad(lambda: loss().data, p.data)) < 1e-6


# -- GELU ------------------------------------------------------------------

def test_gelu_zero():
    assert gelu(tensor([0.0])).data[0] == 0.0


@given(arrays(np.float64, 8, elements=st.floats(-20, 20, allow_nan=False)))
def test_gelu_reflection_identity(x):
    # x Phi(x) - (-x) Phi(-x) = x (Phi(x) + Phi(-x)) = x
    d = gelu(tensor(x)).data - gelu(tensor(-x)).data
    assert np.allclose(d, x, atol=1e-12, rtol=1e-12)


def test_gelu_sum_with_reflection_is_x_erf():
    # the sum form is x * erf(x / sqrt 2), which equals x only asymptotically
    x = np.array([0.5, 1.0, 3.0])
    s = gelu(tensor(x)).data + gelu(tensor(-x)).data
    want = x * np.array([math.erf(v / math.sqrt(2)) for v in x])
    assert np.allclose(s, want, atol=1e-15)
    assert not np.allclose(s, x)


def test_gelu_one_against_math_erf():
    want = 1.0 * 0.5 * (1.0 + math.erf(1.0 / math.sqrt(2.0)))
    got = gelu(tensor([1.0])).data[0]
    assert abs(got - want) < 1e-15
    assert abs(got - 0.841345) < 1e-6


def test_gelu_gradient_matches_fd():
    x = Tensor(np.linspace(-3, 3, 13), requires_grad=True)
    gelu(x).sum().backward()
    num = numeric_grad(lambda: gelu(tensor(x.data)).data.sum(), x.data)
    assert rel_err(x.grad, num) < 1e-6


# -- batch norm ------------------------------------------------------------

def _bn(nf):
    return param(np.ones(nf), "g"), param(np.zeros(nf), "b"), BatchNormState(nf)


def test_batchnorm_constant_input_is_zero():
    g, b, s = _bn(3)
    y = batch_norm(tensor(np.full((4, 3, 2, 2), 7.0)), g, b, s, training=True)
    assert np.array_equal(y.data, np.zeros((4, 3, 2, 2)))


def test_batchnorm_train_output_standardised():
    rng = np.random.default_rng(2)
    g, b, s = _bn(3)
    y = batch_norm(tensor(rng.standard_normal((5, 3, 4, 6)) * 3 + 1), g, b, s, training=True).data
    assert np.abs(y.mean(axis=(0, 2, 3))).max() < 1e-10
    assert np.abs(y.var(axis=(0, 2, 3)) - 1).max() < 1e-5  # eps shrinks the variance slightly


def test_batchnorm_biased_variance_hand_case():
    g, b, s = _bn(1)
    y = batch_norm(tensor([[1.0, 3.0]]), g, b, s, training=True, axis=0)
    # mean 2, biased variance 1
    assert np.allclose(y.data, [[-1.0, 1.0]], atol=1e-5)
    assert np.allclose(y.data, np.array([[-1.0, 1.0]]) / np.sqrt(1 + 1e-5), atol=1e-15)


def test_batchnorm_eval_before_train_raises():
    g, b, s = _bn(2)
    with pytest.raises(UninitializedStatsError):
        batch_norm(tensor(np.ones((3, 2))), g, b, s, training=False)


def test_batchnorm_running_stats_follow_momentum():
    rng = np.random.default_rng(3)
    g, b, s = _bn(2)
    x = rng.standard_normal((10, 2))
    batch_norm(tensor(x), g, b, s, training=True)
    assert np.allclose(s.running_mean, 0.1 * x.mean(axis=0), atol=1e-15)
    assert np.allclose(s.running_var, 0.9 + 0.1 * x.var(axis=0, ddof=1), atol=1e-15)
    y = batch_norm(tensor(x), g, b, s, training=False).data
    assert np.allclose(y, (x - s.running_mean) / np.sqrt(s.running_var + 1e-5))


def test_batchnorm_train_needs_two_values():
    g, b, s = _bn(2)
    with pytest.raises(ContractError):
        batch_norm(tensor(np.ones((1, 2))), g, b, s, training=True)


@pytest.mark.parametrize("training", [True, False])
def test_batchnorm_gradients_match_fd(training):
    rng = np.random.default_rng(4)
    g = param(rng.uniform(0.5, 1.5, 3), "g")
    b = param(rng.uniform(-1, 1, 3), "b")
    s = BatchNormState(3)
    x = Tensor(rng.uniform(-2, 2, (4, 3, 5)), requires_grad=True)
    batch_norm(tensor(x.data), g, b, s, training=True)  # populate running stats
    w = rng.standard_normal((4, 3, 5))

    def loss(xt):
        st_ = BatchNormState(3, running_mean=s.running_mean.copy(),
                             running_var=s.running_var.copy(), num_batches=1)
        return (batch_norm(xt, g, b, st_, training=training) * w).sum()

    loss(x).backward()
    assert rel_err(x.grad, numeric_grad(lambda: loss(tensor(x.data)).data, x.data)) < 1e-6
    for p in (g, b):
        assert rel_err(p.grad, numeric_grad(lambda: loss(tensor(x.data)).data, p.data)) < 1e-6


# -- dropout ---------------------------------------------------------------

def test_dropout_p_zero_and_eval_are_identity():
    x = tensor(np.arange(6.0))
    assert dropout(x, 0.0, np.random.default_rng(0), True) is x
    assert dropout(x, 0.7, None, False) is x


def test_dropout_rejects_p_one():
    with pytest.raises(ConfigError):
        dropout(tensor(np.ones(3)), 1.0, np.random.default_rng(0), True)


def test_dropout_preserves_mean():
    y = dropout(tensor(np.ones(10**6)), 0.5, np.random.default_rng(0), True).data
    assert 0.99 <= y.mean() <= 1.01
    assert set(np.unique(y)) == {0.0, 2.0}


def test_dropout_same_seed_same_mask():
    x = tensor(np.ones(100))
    a = dropout(x, 0.3, np.random.default_rng(5), True).data
    b = dropout(x, 0.3, np.random.default_rng(5), True).data
    assert np.array_equal(a, b)


# -- backward contract -----------------------------------------------------

def test_backward_requires_scalar():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ContractError):
        (x * 2.0).backward()


def test_backward_sum_wx():
    x = np.array([1.0, -2.0, 3.0])
    w = param(np.zeros(3))
    (w * x).sum().backward()
    assert np.array_equal(w.grad, x)


def test_unreachable_parameter_keeps_zero_grad():
    a, b = param([1.0, 2.0], "a"), param([3.0], "b")
    (a * a).sum().backward()
    assert np.array_equal(b.grad, [0.0])


def test_zero_grad_makes_gradients_history_free():
    w = param([1.0, 2.0])
    for _ in range(3):
        (w * w).sum().backward()
    w.zero_grad()
    assert np.array_equal(w.grad, [0.0, 0.0])
    (w * w).sum().backward()
    assert np.array_equal(w.grad, [2.0, 4.0])


def test_shared_subexpression_accumulates():
    x = Tensor(np.array([1.5]), requires_grad=True)
    y = x * x
    (y + y * x).sum().backward()  # d/dx (x^2 + x^3) = 2x + 3x^2
    assert np.allclose(x.grad, [2 * 1.5 + 3 * 1.5**2])


def test_no_grad_records_nothing_and_is_thread_local():
    w = param([1.0])
    seen = {}

    def worker():
        seen["worker"] = (w * 2.0).requires_grad

    with no_grad():
        assert not (w * 2.0).requires_grad
        t = threading.Thread(target=worker)
        t.start()
        t.join()
    assert seen["worker"] is True
    assert (w * 2.0).requires_grad


def test_tape_replay_is_bitwise_deterministic():
    def run():
        rng = np.random.default_rng(9)
        w = param(rng.standard_normal((4, 3)))
        x = tensor(rng.standard_normal((5, 4)))
        loss = gelu(linear(x, w, None)).mean()
        loss.backward()
        return loss.data.tobytes(), w.grad.tobytes()

    assert run() == run()


# -- shape ops -------------------------------------------------------------

@given(st.permutations(range(4)))
def test_permute_inverse_is_identity(axes):
    x = np.random.default_rng(0).standard_normal((2, 3, 4, 5))
    inv = np.argsort(axes)
    y = permute(permute(tensor(x), axes), inv)
    assert np.array_equal(y.data, x)


def test_permute_backward_is_inverse():
    rng = np.random.default_rng(1)
    x = Tensor(rng.standard_normal((2, 3, 4)), requires_grad=True)
    w = rng.standard_normal((4, 2, 3))
    (permute(x, (2, 0, 1)) * w).sum().backward()
    assert np.array_equal(x.grad, w.transpose(1, 2, 0))


def test_permute_invalid_axes():
    with pytest.raises(DimensionError):
        permute(tensor(np.ones((2, 3))), (0, 0))
    with pytest.raises(DimensionError):
        permute(tensor(np.ones((2, 3))), (0,))


def test_flatten_row_major():
    x = np.arange(24.0).reshape(2, 3, 4)
    y = flatten(tensor(x), 1)
    assert y.shape == (2, 12)
    assert np.array_equal(y.data, x.reshape(2, 12))


def test_reshape_invalid():
    with pytest.raises(DimensionError):
        reshape(tensor(np.ones(6)), (4, 2))


def test_residual_add_gradient():
    rng = np.random.default_rng(2)
    w = rng.standard_normal((3, 3))
    x = Tensor(rng.standard_normal((2, 3)), requires_grad=True)

    def f(xt):
        return (xt + gelu(matmul(xt, tensor(w)))).sum()

    f(x).backward()
    num = numeric_grad(lambda: f(tensor(x.data)).data, x.data)
    assert rel_err(x.grad, num) < 1e-6
    # without the branch the gradient would be exactly one
    assert not np.allclose(x.grad, 1.0)


def test_concat_stack_getitem_swapaxes_gradients():
    rng = np.random.default_rng(3)
    a = Tensor(rng.standard_normal((2, 3)), requires_grad=True)
    b = Tensor(rng.standard_normal((2, 3)), requires_grad=True)
    w = rng.standard_normal((3, 4))

    def f(at, bt):
        c = concat([at, bt], axis=0)           # (4, 3)
        s = stack([at, bt], axis=2)            # (2, 3, 2)
        g = getitem(c, np.array([0, 0, 3]))    # repeated index accumulates
        return (swapaxes(c, 0, 1) * w).sum() + (s * s).sum() + g.sum() + getitem(s, (0, slice(1, 3))).sum()

    f(a, b).backward()
    na = numeric_grad(lambda: f(tensor(a.data), tensor(b.data)).data, a.data)
    nb = numeric_grad(lambda: f(tensor(a.data), tensor(b.data)).data, b.data)
    assert rel_err(a.grad, na) < 1e-6
    assert rel_err(b.grad, nb) < 1e-6


@given(arrays(np.float64, (3, 4), elements=finite), arrays(np.float64, (4,), elements=finite))
def test_broadcast_arithmetic_gradients(xa, ya):
    x = Tensor(xa.copy(), requires_grad=True)
    y = Tensor(ya + 3.0, requires_grad=True)  # keep away from zero for division

    def f(xt, yt):
        return (xt * yt - xt / yt + yt).sum()

    f(x, y).backward()
    ny = numeric_grad(lambda: f(tensor(xa), tensor(y.data)).data, y.data)
    nx = numeric_grad(lambda: f(tensor(x.data), tensor(ya + 3.0)).data, x.data)
    assert rel_err(x.grad, nx, 1e-8) < 1e-6
    assert rel_err(y.grad, ny, 1e-8) < 1e-6


def test_parameter_grad_shape_matches_value():
    p = param(np.ones((2, 3)))
    assert p.grad.shape == p.shape
    (p * p).sum().backward()
    assert p.grad.shape == p.shape


def test_forward_values_finite_on_finite_inputs():
    rng = np.random.default_rng(4)
    x = tensor(rng.uniform(-50, 50, (3, 5)))
    y = gelu(linear(x, param(rng.standard_normal((5, 4))), param(np.zeros(4))))
    assert np.all(np.isfinite(y.data))
