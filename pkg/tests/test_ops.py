"""Layer primitives against brute-force numpy oracles."""

import numpy as np
import pytest

from plainscan import ops
from plainscan.errors import ConfigError, ShapeError
from plainscan.tensor import Tensor


def test_activation_dispatch():
    x = Tensor(np.array([1.0, -1.0]))
    assert np.allclose(ops.activation(x, "silu").data, x.data / (1 + np.exp(-x.data)))
    assert np.allclose(ops.activation(x, "softplus").data, np.log1p(np.exp(x.data)))
    with pytest.raises(ConfigError, match="relu"):
        ops.activation(x, "relu")


def test_layernorm_moments():
    rng = np.random.default_rng(0)
    x = Tensor(rng.standard_normal((5, 7, 16)) * 3.0 + 2.0)
    out = ops.layernorm(x, Tensor(np.ones(16)), Tensor(np.zeros(16))).data
    assert np.abs(out.mean(axis=-1)).max() < 1e-12
    assert np.abs(out.var(axis=-1) - 1.0).max() < 1e-5  # eps-limited


def test_layernorm_affine_and_shapes():
    x = Tensor(np.ones((2, 4)))
    g = Tensor(np.full(4, 2.0))
    b = Tensor(np.full(4, -1.0))
    out = ops.layernorm(x, g, b).data
    assert np.allclose(out, -1.0)  # constant rows normalize to zero
    with pytest.raises(ShapeError):
        ops.layernorm(x, Tensor(np.ones(3)), b)
    with pytest.raises(ConfigError):
        ops.layernorm(x, g, b, eps=0.0)


def test_layernorm_grad():
    rng = np.random.default_rng(1)
    x = Tensor(rng.standard_normal((3, 6)), name="x")
    g = Tensor(rng.standard_normal(6), name="g")
    b = Tensor(rng.standard_normal(6), name="b")
    err = ops.grad_check(lambda x, g, b: (ops.layernorm(x, g, b) ** 2).sum(), [x, g, b])
    assert err < 1e-3


def _depthwise_oracle(x, k):
    H, W, C = x.shape
    ks = k.shape[0]
    p = (ks - 1) // 2
    out = np.zeros_like(x)
    for i in range(H):
        for j in range(W):
            for di in range(ks):
                for dj in range(ks):
                    si, sj = i + di - p, j + dj - p
                    if 0 <= si < H and 0 <= sj < W:
                        out[i, j] += x[si, sj] * k[di, dj]
    return out


def test_depthwise_conv_matches_quadruple_loop():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((6, 5, 3))
    k = rng.standard_normal((3, 3, 3))
    out = ops.depthwise_conv2d(Tensor(x), Tensor(k)).data
    assert np.abs(out - _depthwise_oracle(x, k)).max() < 1e-12


def test_depthwise_conv_batched_equals_stacked_singles():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((2, 4, 4, 2))
    k = rng.standard_normal((5, 5, 2))
    batched = ops.depthwise_conv2d(Tensor(x), Tensor(k)).data
    singles = np.stack(
        [ops.depthwise_conv2d(Tensor(x[i]), Tensor(k)).data for i in range(2)]
    )
    assert np.abs(batched - singles).max() < 1e-12


def test_depthwise_conv_validation():
    with pytest.raises(ConfigError, match="odd"):
        ops.depthwise_conv2d(Tensor(np.zeros((4, 4, 2))), Tensor(np.zeros((2, 2, 2))))
    with pytest.raises(ShapeError, match="channel"):
        ops.depthwise_conv2d(Tensor(np.zeros((4, 4, 2))), Tensor(np.zeros((3, 3, 5))))
    with pytest.raises(ShapeError):
        ops.depthwise_conv2d(Tensor(np.zeros((4, 4))), Tensor(np.zeros((3, 3, 4))))


def _conv_oracle(x, w, b, stride, padding):
    B, H, W, Cin = x.shape
    k, _, _, Cout = w.shape
    xp = np.pad(x, [(0, 0), (padding, padding), (padding, padding), (0, 0)])
    Ho = (xp.shape[1] - k) // stride + 1
    Wo = (xp.shape[2] - k) // stride + 1
    out = np.zeros((B, Ho, Wo, Cout))
    for n in range(B):
        for i in range(Ho):
            for j in range(Wo):
                patch = xp[n, i * stride : i * stride + k, j * stride : j * stride + k]
                out[n, i, j] = np.tensordot(patch, w, axes=3)
    return out + (0 if b is None else b)


@pytest.mark.parametrize("stride,padding", [(1, 0), (2, 1), (4, 0)])
def test_conv2d_matches_loop_oracle(stride, padding):
    rng = np.random.default_rng(4)
    x = rng.standard_normal((2, 8, 8, 3))
    w = rng.standard_normal((3, 3, 3, 5))
    b = rng.standard_normal(5)
    out = ops.conv2d(Tensor(x), Tensor(w), Tensor(b), stride=stride, padding=padding).data
    assert np.abs(out - _conv_oracle(x, w, b, stride, padding)).max() < 1e-12


def test_conv2d_grad():
    rng = np.random.default_rng(5)
    x = Tensor(rng.standard_normal((1, 6, 6, 2)), name="x")
    w = Tensor(rng.standard_normal((3, 3, 2, 3)), name="w")
    b = Tensor(rng.standard_normal(3), name="b")
    err = ops.grad_check(
        lambda x, w, b: (ops.conv2d(x, w, b, stride=2, padding=1) ** 2).sum(), [x, w, b]
    )
    assert err < 1e-3


def test_linear_matches_manual():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((2, 3, 5))
    w = rng.standard_normal((5, 4))
    b = rng.standard_normal(4)
    out = ops.linear(Tensor(x), Tensor(w), Tensor(b)).data
    assert np.abs(out - (x @ w + b)).max() < 1e-12
    out = ops.linear(Tensor(x), Tensor(w)).data
    assert np.abs(out - x @ w).max() < 1e-12


def test_cross_entropy_value_and_grad():
    logits = np.array([[2.0, 0.5, -1.0], [0.0, 0.0, 0.0]])
    labels = np.array([0, 2])
    t = Tensor(logits.copy(), name="logits")
    loss = ops.cross_entropy(t, labels)
    p = np.exp(logits) / np.exp(logits).sum(axis=1, keepdims=True)
    expected = -np.log(p[[0, 1], labels]).mean()
    assert float(loss.data) == pytest.approx(expected, abs=1e-12)
    loss.backward()
    assert np.abs(t.grad.sum(axis=1)).max() < 1e-12  # rows of softmax grads sum to 0
    err = ops.grad_check(lambda t: ops.cross_entropy(t, labels), [t])
    assert err < 1e-3


def test_cross_entropy_is_shift_invariant_and_stable():
    logits = np.array([[1000.0, 999.0]])
    loss = ops.cross_entropy(Tensor(logits), np.array([0]))
    assert float(loss.data) == pytest.approx(np.log1p(np.exp(-1.0)), abs=1e-12)


def test_grad_check_reports_worst_coordinate():
    x = Tensor(np.array([0.5, -0.3]), name="x")
    assert ops.grad_check(lambda x: (x * x).sum(), [x]) < 1e-6


def test_grad_check_subsampling_is_deterministic():
    rng = np.random.default_rng(9)
    x = Tensor(rng.standard_normal(50), name="x")
    e1 = ops.grad_check(lambda x: (x**2).sum(), [x], max_coords_per_input=5, seed=3)
    e2 = ops.grad_check(lambda x: (x**2).sum(), [x], max_coords_per_input=5, seed=3)
    assert e1 == e2
