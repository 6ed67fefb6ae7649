"""Neural-net primitives built on the gradient tape.

Each function here is a single graph node with a hand-written backward
rule; compositions of :class:`~plainscan.tensor.Tensor` arithmetic live
with their callers.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, NumericalError, ShapeError
from .tensor import Tensor, _record, _sigmoid


def activation(x: Tensor, kind: str) -> Tensor:
    if kind == "silu":
        return x.silu()
    if kind == "softplus":
        return x.softplus()
    raise ConfigError(f"unknown activation kind {kind!r} (want 'silu' or 'softplus')")


def layernorm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-6) -> Tensor:
    """Normalize over the last axis to zero mean / unit variance, then affine."""
    d = x.shape[-1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise ShapeError(
            f"layernorm affine params must have shape ({d},), got {gamma.shape} and {beta.shape}"
        )
    if eps <= 0:
        raise ConfigError(f"layernorm eps must be positive, got {eps}")
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    _record(4 * x.size)
    out = Tensor(xhat * gamma.data + beta.data, (x, gamma, beta))

    def bwd(g):
        lead = tuple(range(g.ndim - 1))
        gamma._accumulate((g * xhat).sum(axis=lead))
        beta._accumulate(g.sum(axis=lead))
        gx = g * gamma.data
        m1 = gx.mean(axis=-1, keepdims=True)
        m2 = (gx * xhat).mean(axis=-1, keepdims=True)
        x._accumulate((gx - m1 - xhat * m2) * inv)

    out._backward = bwd
    return out


def depthwise_conv2d(x: Tensor, kernel: Tensor) -> Tensor:
    """Per-channel 2-D 'same' correlation; accepts [H,W,C] or [B,H,W,C]."""
    if kernel.data.ndim != 3 or kernel.shape[0] != kernel.shape[1]:
        raise ShapeError(f"depthwise kernel must be [k,k,C], got {kernel.shape}")
    k = kernel.shape[0]
    if k % 2 == 0:
        raise ConfigError(f"depthwise kernel extent must be odd, got {k}")
    batched = x.data.ndim == 4
    if not batched and x.data.ndim != 3:
        raise ShapeError(f"depthwise_conv2d input must be [H,W,C] or [B,H,W,C], got {x.shape}")
    if x.shape[-1] != kernel.shape[-1]:
        raise ShapeError(
            f"channel mismatch: input {x.shape} vs kernel {kernel.shape}"
        )
    H, W, C = x.shape[-3:]
    p = (k - 1) // 2
    pad = [(0, 0)] * (x.data.ndim - 3) + [(p, p), (p, p), (0, 0)]
    xp = np.pad(x.data, pad)
    out_data = np.zeros_like(x.data)
    for di in range(k):
        for dj in range(k):
            out_data += xp[..., di : di + H, dj : dj + W, :] * kernel.data[di, dj]
    nb = x.shape[0] if batched else 1
    _record(nb * H * W * k * k * C)
    out = Tensor(out_data, (x, kernel))

    def bwd(g):
        gxp = np.zeros_like(xp)
        gk = np.zeros_like(kernel.data)
        lead = tuple(range(g.ndim - 1))
        for di in range(k):
            for dj in range(k):
                win = xp[..., di : di + H, dj : dj + W, :]
                gk[di, dj] = (g * win).sum(axis=lead)
                gxp[..., di : di + H, dj : dj + W, :] += g * kernel.data[di, dj]
        kernel._accumulate(gk)
        x._accumulate(gxp[..., p : p + H, p : p + W, :])

    out._backward = bwd
    return out


def conv2d(x: Tensor, w: Tensor, b: Tensor | None, stride: int, padding: int = 0) -> Tensor:
    """Dense strided conv, input [B,H,W,Cin], weight [k,k,Cin,Cout]."""
    if x.data.ndim != 4:
        raise ShapeError(f"conv2d input must be [B,H,W,C], got {x.shape}")
    if w.data.ndim != 4 or w.shape[0] != w.shape[1]:
        raise ShapeError(f"conv2d weight must be [k,k,Cin,Cout], got {w.shape}")
    if x.shape[3] != w.shape[2]:
        raise ShapeError(f"channel mismatch: input {x.shape} vs weight {w.shape}")
    B, H, W, Cin = x.shape
    k, _, _, Cout = w.shape
    if padding:
        xp = np.pad(x.data, [(0, 0), (padding, padding), (padding, padding), (0, 0)])
    else:
        xp = x.data
    Hp, Wp = xp.shape[1:3]
    Ho = (Hp - k) // stride + 1
    Wo = (Wp - k) // stride + 1
    cols = np.empty((B, Ho, Wo, k * k * Cin), dtype=x.dtype)
    for di in range(k):
        for dj in range(k):
            sl = xp[:, di : di + stride * (Ho - 1) + 1 : stride,
                    dj : dj + stride * (Wo - 1) + 1 : stride, :]
            cols[..., (di * k + dj) * Cin : (di * k + dj + 1) * Cin] = sl
    wmat = w.data.reshape(k * k * Cin, Cout)
    out_data = cols.reshape(-1, k * k * Cin) @ wmat
    out_data = out_data.reshape(B, Ho, Wo, Cout)
    if b is not None:
        out_data = out_data + b.data
    _record(B * Ho * Wo * k * k * Cin * Cout)
    parents = (x, w) if b is None else (x, w, b)
    out = Tensor(out_data, parents)

    def bwd(g):
        gflat = g.reshape(-1, Cout)
        w._accumulate((cols.reshape(-1, k * k * Cin).T @ gflat).reshape(w.shape))
        if b is not None:
            b._accumulate(gflat.sum(axis=0))
        gcols = (gflat @ wmat.T).reshape(B, Ho, Wo, k * k * Cin)
        gxp = np.zeros_like(xp)
        for di in range(k):
            for dj in range(k):
                gxp[:, di : di + stride * (Ho - 1) + 1 : stride,
                    dj : dj + stride * (Wo - 1) + 1 : stride, :] += gcols[
                    ..., (di * k + dj) * Cin : (di * k + dj + 1) * Cin
                ]
        x._accumulate(gxp[:, padding : padding + H, padding : padding + W, :] if padding else gxp)

    out._backward = bwd
    return out


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """Affine map over the last axis of an arbitrarily batched input."""
    lead = x.shape[:-1]
    out = x.reshape(-1, x.shape[-1]) @ w
    if b is not None:
        out = out + b.expand(out.shape)
    return out.reshape(*lead, w.shape[1])


def cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean softmax cross-entropy; logits [B,K], integer labels [B]."""
    labels = np.asarray(labels)
    B, K = logits.shape
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    _record(3 * B * K)
    out = Tensor(-logp[np.arange(B), labels].mean(), (logits,))

    def bwd(g):
        probs = np.exp(logp)
        probs[np.arange(B), labels] -= 1.0
        logits._accumulate(g * probs / B)

    out._backward = bwd
    return out


def grad_check(f, inputs, h=1e-5, max_coords_per_input=None, seed=0):
    """Max relative error between tape gradients and central differences.

    ``f`` maps the given leaf tensors to a scalar Tensor.  Each probed
    coordinate is perturbed by ``h * max(1, |x|)``.  With
    ``max_coords_per_input`` set, a deterministic subsample of coordinates
    is probed per input (needed for whole-model checks).
    """
    for t in inputs:
        t.grad = None
    out = f(*inputs)
    if not np.isfinite(out.data).all():
        raise NumericalError("grad_check: objective is not finite at the base point")
    out.backward()
    analytic = [
        t.grad.copy() if t.grad is not None else np.zeros_like(t.data) for t in inputs
    ]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for t, ga in zip(inputs, analytic):
        flat = t.data.reshape(-1)
        gflat = ga.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords_per_input is not None and flat.size > max_coords_per_input:
            coords = rng.choice(flat.size, size=max_coords_per_input, replace=False)
        for i in coords:
            x0 = flat[i]
            step = h * max(1.0, abs(x0))
            flat[i] = x0 + step
            yp = float(f(*inputs).data)
            flat[i] = x0 - step
            ym = float(f(*inputs).data)
            flat[i] = x0
            num = (yp - ym) / (2.0 * step)
            if not np.isfinite(num):
                raise NumericalError(
                    f"non-finite central difference at input {t.name or '?'} coordinate {int(i)}"
                )
            rel = abs(gflat[i] - num) / max(abs(gflat[i]), abs(num), 1e-8)
            worst = max(worst, rel)
    return worst
