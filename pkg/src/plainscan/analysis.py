"""Analytic parameter and MAC accounting.

One fused multiply-add counts as one MAC; activations and special
functions are costed at their per-element equivalents recorded by the
tensor engine, so :func:`count_flops` reproduces an instrumented forward
pass exactly.  Buckets follow the token/channel/other decomposition:
the scan recurrence is token mixing, the block's input and output
projections are channel mixing, and everything else (tokenizer, scan
parameter projections, convs, norms, gates, head) is "other".

For the attention baseline the whole multi-head attention module
(QKV/out projections plus the two quadratic matmuls) is token mixing and
the MLP is channel mixing; only matmuls are costed, matching how the
reference numbers for plain ViTs are conventionally measured.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError
from .model import _STEM_WIDTHS, ModelConfig, param_spec


@dataclass(frozen=True)
class FlopsReport:
    token_mixing: int
    channel_mixing: int
    other: int
    resolution: tuple
    model_id: str

    def __post_init__(self):
        if min(self.token_mixing, self.channel_mixing, self.other) < 0:
            raise ConfigError("MAC counts must be non-negative")

    @property
    def total(self) -> int:
        return self.token_mixing + self.channel_mixing + self.other

    def rows(self):
        return [
            ("token_mixing", self.token_mixing),
            ("channel_mixing", self.channel_mixing),
            ("other", self.other),
            ("total", self.total),
        ]


@dataclass(frozen=True)
class AttentionBaselineConfig:
    depth: int = 12
    d_model: int = 224
    mlp_ratio: int = 4
    patch: int = 16
    num_heads: int = 4
    num_classes: int = 1000
    model_id: str = "deit_c224"


DEIT_C224 = AttentionBaselineConfig()


def count_params(cfg: ModelConfig):
    """Per-tensor table [(name, shape, count)] plus the grand total."""
    table = [(name, shape, math.prod(shape)) for name, shape in param_spec(cfg)]
    return table, sum(c for _, _, c in table)


def _check_resolution(resolution, patch):
    h, w = resolution
    if h % patch or w % patch:
        raise ConfigError(
            f"resolution {h}x{w} must be a multiple of the downsample factor {patch}"
        )
    return (h // patch) * (w // patch)


def _stem_macs(cfg: ModelConfig, resolution):
    h, w = resolution
    if cfg.stem == "single":
        n = (h // cfg.patch) * (w // cfg.patch)
        return n * cfg.patch * cfg.patch * 3 * cfg.d_model
    widths = (3,) + _STEM_WIDTHS + (cfg.d_model,)
    total = 0
    for i in range(4):
        h, w = h // 2, w // 2
        total += h * w * 9 * widths[i] * widths[i + 1]
        if i < 3:
            total += 2 * h * w * widths[i + 1]  # silu between stem convs
    return total


def count_flops(cfg: ModelConfig, resolution) -> FlopsReport:
    """MAC counts for one forward pass at the given input resolution."""
    n = _check_resolution(resolution, cfg.patch)
    d, di, m, r, k = cfg.d_model, cfg.d_inner, cfg.state_size, cfg.rank, cfg.conv_k

    scan_per_block = 4 * n * (10 * di * m + di)
    proj_per_block = n * d * 2 * di + n * di * d
    other_per_block = (
        4 * n * d              # pre-norm
        + n * k * k * di       # depthwise conv
        + 2 * n * di           # silu on the conv branch
        + n * di * (r + 2 * m)  # B/C/Delta-logit projection
        + n * r * di           # Delta up-projection
        + n * di               # softplus
        + 2 * n * di           # silu on the gate branch
        + n * di               # gating multiply
    )
    head_and_pool = 4 * n * d + d + d * cfg.num_classes
    return FlopsReport(
        token_mixing=cfg.depth * scan_per_block,
        channel_mixing=cfg.depth * proj_per_block,
        other=cfg.depth * other_per_block + _stem_macs(cfg, resolution) + head_and_pool,
        resolution=tuple(resolution),
        model_id=f"d{cfg.depth}w{cfg.d_model}",
    )


def count_flops_attention(cfg: AttentionBaselineConfig, resolution) -> FlopsReport:
    """Analytic ViT-style baseline; matmul MACs only."""
    n = _check_resolution(resolution, cfg.patch)
    d = cfg.d_model
    token = cfg.depth * (2 * n * n * d + 4 * n * d * d)
    channel = cfg.depth * 2 * cfg.mlp_ratio * n * d * d
    other = n * cfg.patch * cfg.patch * 3 * d + d * cfg.num_classes
    return FlopsReport(
        token_mixing=token,
        channel_mixing=channel,
        other=other,
        resolution=tuple(resolution),
        model_id=cfg.model_id,
    )


def peak_activation_bytes(cfg, resolution, dtype_bytes=8) -> int:
    """Footprint of the widest live operation (inputs + outputs)."""
    if isinstance(cfg, AttentionBaselineConfig):
        n = _check_resolution(resolution, cfg.patch)
        attn = 2 * cfg.num_heads * n * n + 2 * n * cfg.d_model
        embed = resolution[0] * resolution[1] * 3 + n * cfg.d_model
        return dtype_bytes * max(attn, embed)
    n = _check_resolution(resolution, cfg.patch)
    scan = 2 * 4 * n * cfg.d_inner * cfg.state_size
    proj = n * cfg.d_model + n * 2 * cfg.d_inner
    embed = resolution[0] * resolution[1] * 3 + n * cfg.d_model
    return dtype_bytes * max(scan, proj, embed)


def scaling_curve(configs, resolutions):
    """Rows of (model_id, side, token, channel, other, total, peak_bytes)."""
    rows = []
    for cfg in configs:
        for side in resolutions:
            res = (side, side)
            if isinstance(cfg, AttentionBaselineConfig):
                rep = count_flops_attention(cfg, res)
            else:
                rep = count_flops(cfg, res)
            rows.append(
                (
                    rep.model_id,
                    side,
                    rep.token_mixing,
                    rep.channel_mixing,
                    rep.other,
                    rep.total,
                    peak_activation_bytes(cfg, res),
                )
            )
    return rows
