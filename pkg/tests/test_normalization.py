import numpy as np
import pytest
from _fd import numeric_grad, rel_err
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wpmixer.autodiff import Tensor, tensor
from wpmixer.errors import ContractError
from wpmixer.normalization import RevIN, revin_denormalize, revin_normalize


def test_constant_channel_normalises_to_zero():
    y, _ = RevIN(2).normalize(np.full((3, 2, 10), 4.0))
    assert np.array_equal(y.data, np.zeros((3, 2, 10)))


def test_output_standardised():
    x = np.random.default_rng(0).standard_normal((4, 3, 50)) * 7 - 2
    y, _ = RevIN(3).normalize(x)
    assert np.abs(y.data.mean(axis=-1)).max() < 1e-8
    assert np.abs(y.data.var(axis=-1) - 1).max() < 1e-5  # eps in the denominator


def test_hand_example_biased_variance():
    y, st_ = RevIN(1).normalize(np.array([[[1.0, 2.0, 3.0]]]))
    want = np.array([-1.0, 0.0, 1.0]) / np.sqrt(2.0 / 3.0 + 1e-5)
    assert np.allclose(y.data[0, 0], want, atol=1e-15)
    assert np.allclose(y.data[0, 0], [-1.2247, 0.0, 1.2247], atol=1e-4)
    assert st_.mean.data.item() == 2.0


def test_round_trip_identity_affine():
    x = np.random.default_rng(1).standard_normal((2, 3, 20))
    rev = RevIN(3)
    y, s = rev.normalize(x)
    assert np.abs(rev.denormalize(y, s).data - x).max() < 1e-12


@given(arrays(np.float64, (2, 3, 16), elements=st.floats(-1e3, 1e3)),
       arrays(np.float64, 3, elements=st.floats(0.2, 5.0)),
       arrays(np.float64, 3, elements=st.floats(-3, 3)))
def test_round_trip_random_affine(x, w, b):
    rev = RevIN(3)
    rev.weight.data, rev.bias.data = w, b
    y, s = rev.normalize(x)
    scale = max(1.0, np.abs(x).max())
    assert np.abs(rev.denormalize(y, s).data - x).max() < 1e-10 * scale


def test_denormalize_zero_gives_bias_adjusted_mean():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((1, 2, 30))
    rev = RevIN(2)
    rev.weight.data = np.array([2.0, 0.5])
    rev.bias.data = np.array([0.3, -1.0])
    _, s = rev.normalize(x)
    out = rev.denormalize(np.zeros((1, 2, 5)), s).data
    mu, sd = x.mean(-1), np.sqrt(x.var(-1) + 1e-5)
    want = (-rev.bias.data / rev.weight.data) * sd + mu
    assert np.allclose(out, want[..., None], atol=1e-14)


def test_denormalize_forecast_length_differs():
    rev = RevIN(2)
    _, s = rev.normalize(np.random.default_rng(3).standard_normal((4, 2, 48)))
    assert rev.denormalize(np.zeros((4, 2, 7)), s).shape == (4, 2, 7)


def test_denormalize_without_stats():
    with pytest.raises(ContractError):
        RevIN(2).denormalize(np.zeros((1, 2, 3)), None)


def test_channel_mismatch():
    with pytest.raises(ContractError):
        RevIN(2).normalize(np.zeros((1, 3, 5)))


@given(st.floats(0.01, 100.0), st.integers(0, 2**31))
def test_scale_invariance_up_to_eps(alpha, seed):
    # y(a x) - y(x) = (x - mu) [a / sqrt(a^2 var + eps) - 1 / sqrt(var + eps)]
    x = np.random.default_rng(seed).standard_normal((2, 2, 32)) + 1.0
    a, _ = RevIN(2).normalize(x)
    b, _ = RevIN(2).normalize(alpha * x)
    var = x.var(axis=-1, keepdims=True)
    bound = np.abs(a.data) * 1e-5 / (2 * var) * abs(1 - 1 / alpha**2) + 1e-12
    assert np.all(np.abs(a.data - b.data) <= bound * 1.01)


def test_scale_invariance_tight_when_variance_dominates_eps():
    x = np.random.default_rng(4).standard_normal((2, 2, 64)) * 1e4
    a, _ = RevIN(2).normalize(x)
    b, _ = RevIN(2).normalize(3.0 * x)
    assert np.abs(a.data - b.data).max() < 1e-10


def test_gradients_match_fd():
    rng = np.random.default_rng(5)
    rev = RevIN(2)
    rev.weight.data = rng.uniform(0.5, 1.5, 2)
    rev.bias.data = rng.uniform(-0.5, 0.5, 2)
    x = Tensor(rng.uniform(-2, 2, (3, 2, 12)), requires_grad=True)
    w_in, w_out = rng.standard_normal((3, 2, 12)), rng.standard_normal((3, 2, 4))
    z = rng.standard_normal((3, 2, 4))

    def f(xt):
        y, s = revin_normalize(xt, rev)
        return (y * w_in).sum() + (revin_denormalize(tensor(z), rev, s) * w_out).sum()

    f(x).backward()
    assert rel_err(x.grad, numeric_grad(lambda: f(tensor(x.data)).data, x.data)) < 1e-5
    for p in (rev.weight, rev.bias):
        num = numeric_grad(lambda: f(tensor(x.data)).data, p.data)
        assert rel_err(p.grad, num) < 1e-5


def test_affine_off_has_no_parameters():
    rev = RevIN(3, affine=False)
    assert rev.parameters() == []
    x = np.random.default_rng(6).standard_normal((1, 3, 9))
    y, s = rev.normalize(x)
    assert np.abs(rev.denormalize(y, s).data - x).max() < 1e-12
