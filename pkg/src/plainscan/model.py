"""Full visual backbone: tokenizer, identical gated-scan blocks, head.

Token resolution and channel width are constant through the whole stack;
there is no CLS token anywhere, classification pools the token grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import ops
from .errors import ConfigError, ManifestError, NumericalError
from .paths import generate_continuous_paths
from .scan import SsmCore, direction_aware_scan_2d
from .tensor import Tensor

# Stacked tokenizer: four stride-2 3x3 convs; the widths before the final
# projection to d_model are fixed so compute does not balloon with model
# width.
_STEM_WIDTHS = (96, 192, 192)


@dataclass(frozen=True)
class ModelConfig:
    depth: int
    d_model: int
    expand: int = 2
    state_size: int = 16
    dt_rank: int | None = None
    patch: int = 16
    conv_k: int = 7
    img_size: int = 224
    num_classes: int = 1000
    stem: str = "stacked"  # "stacked" or "single"
    single_skip: bool = False
    dtype: str = "float64"

    def __post_init__(self):
        if self.depth < 1 or self.d_model < 1:
            raise ConfigError(f"bad depth/width: {self.depth}/{self.d_model}")
        if self.conv_k % 2 == 0:
            raise ConfigError(f"conv_k must be odd, got {self.conv_k}")
        if self.stem not in ("stacked", "single"):
            raise ConfigError(f"unknown stem kind {self.stem!r}")
        if self.stem == "stacked" and self.patch != 16:
            raise ConfigError("the stacked stem downsamples by 16; use stem='single'")
        if self.img_size % self.patch:
            raise ConfigError(
                f"img_size {self.img_size} must be a multiple of patch {self.patch}"
            )

    @property
    def d_inner(self):
        return self.expand * self.d_model

    @property
    def rank(self):
        return self.dt_rank if self.dt_rank is not None else math.ceil(self.d_model / 16)

    @property
    def grid(self):
        return self.img_size // self.patch

    @property
    def np_dtype(self):
        return np.float64 if self.dtype == "float64" else np.float32


PRESETS = {
    "L1": ModelConfig(depth=24, d_model=192),
    "L2": ModelConfig(depth=24, d_model=384),
    "L3": ModelConfig(depth=36, d_model=448),
    "toy": ModelConfig(
        depth=2, d_model=32, state_size=4, patch=8, img_size=32,
        num_classes=2, stem="single",
    ),
}


def get_config(name: str, **overrides) -> ModelConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    cfg = PRESETS[name]
    return replace(cfg, **overrides) if overrides else cfg


def param_spec(cfg: ModelConfig):
    """Ordered (name, shape) for every learnable tensor in the model."""
    d, di, m, r, k = cfg.d_model, cfg.d_inner, cfg.state_size, cfg.rank, cfg.conv_k
    spec = []
    if cfg.stem == "single":
        spec += [("patch_embed.weight", (cfg.patch, cfg.patch, 3, d)),
                 ("patch_embed.bias", (d,))]
    else:
        widths = (3,) + _STEM_WIDTHS + (d,)
        for i in range(4):
            spec += [(f"stem.{i}.weight", (3, 3, widths[i], widths[i + 1])),
                     (f"stem.{i}.bias", (widths[i + 1],))]
    spec.append(("pos_embed", (cfg.grid * cfg.grid, d)))
    for i in range(cfg.depth):
        p = f"blocks.{i}."
        spec += [
            (p + "norm.gamma", (d,)),
            (p + "norm.beta", (d,)),
            (p + "in_proj.weight", (d, 2 * di)),
            (p + "in_proj.bias", (2 * di,)),
            (p + "conv.weight", (k, k, di)),
            (p + "x_proj.weight", (di, r + 2 * m)),
            (p + "dt_proj.weight", (r, di)),
            (p + "dt_proj.bias", (di,)),
            (p + "A", (di, m)),
            (p + "D", (di,)),
            (p + "theta", (5, m)),
            (p + "out_proj.weight", (di, d)),
            (p + "out_proj.bias", (d,)),
        ]
    spec += [
        ("norm.gamma", (d,)),
        ("norm.beta", (d,)),
        ("head.weight", (d, cfg.num_classes)),
        ("head.bias", (cfg.num_classes,)),
    ]
    return spec


def _trunc_normal(rng, shape, std=0.02):
    out = rng.standard_normal(shape)
    bad = np.abs(out) > 2.0
    while bad.any():
        out[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(out) > 2.0
    return out * std


def init_params(cfg: ModelConfig, seed: int = 0) -> dict[str, Tensor]:
    """Deterministic initialization keyed by seed."""
    rng = np.random.default_rng(seed)
    dt = cfg.np_dtype
    params = {}
    for name, shape in param_spec(cfg):
        leaf = name.rsplit(".", 1)[-1]
        if leaf in ("bias", "beta") and not name.endswith("dt_proj.bias"):
            val = np.zeros(shape)
        elif leaf == "gamma" or leaf == "D":
            val = np.ones(shape)
        elif leaf == "theta":
            val = np.zeros(shape)
        elif leaf == "A":
            val = -np.broadcast_to(np.arange(1, shape[1] + 1, dtype=float), shape).copy()
        elif name.endswith("dt_proj.bias"):
            # softplus(bias) lands uniformly (log scale) in [1e-3, 1e-1]
            u = np.exp(rng.uniform(np.log(1e-3), np.log(1e-1), shape))
            val = np.log(np.expm1(u))
        else:
            val = _trunc_normal(rng, shape)
        params[name] = Tensor(val.astype(dt), name=name)
    return params


def check_params(cfg: ModelConfig, params: dict) -> None:
    """Raise a ManifestError naming the first tensor that disagrees."""
    spec = param_spec(cfg)
    names = {n for n, _ in spec}
    for name, shape in spec:
        if name not in params:
            raise ManifestError(f"missing tensor {name!r} (expected shape {shape})")
        if tuple(params[name].shape) != shape:
            raise ManifestError(
                f"tensor {name!r} has shape {tuple(params[name].shape)}, expected {shape}"
            )
    extra = sorted(set(params) - names)
    if extra:
        raise ManifestError(f"unexpected tensor {extra[0]!r} in weights")


def bilinear_resample_matrix(src_hw, dst_hw):
    """Dense [dst_n, src_n] map carrying grid values between resolutions."""
    sh, sw = src_hw
    dh, dw = dst_hw
    mat = np.zeros((dh * dw, sh * sw))

    def axis_weights(dst, src):
        if dst == 1 or src == 1:
            return [(0, 0, 1.0, 0.0)] * dst
        out = []
        for i in range(dst):
            t = i * (src - 1) / (dst - 1)
            lo = min(int(np.floor(t)), src - 2)
            out.append((lo, lo + 1, 1.0 - (t - lo), t - lo))
        return out

    rows = axis_weights(dh, sh)
    cols = axis_weights(dw, sw)
    for i, (r0, r1, wr0, wr1) in enumerate(rows):
        for j, (c0, c1, wc0, wc1) in enumerate(cols):
            dst = i * dw + j
            mat[dst, r0 * sw + c0] += wr0 * wc0
            mat[dst, r0 * sw + c1] += wr0 * wc1
            mat[dst, r1 * sw + c0] += wr1 * wc0
            mat[dst, r1 * sw + c1] += wr1 * wc1
    return mat


class Model:
    """Immutable weights + pure forward; scan paths are cached per extent."""

    def __init__(self, cfg: ModelConfig, params: dict | None = None, seed: int = 0):
        self.cfg = cfg
        self.params = params if params is not None else init_params(cfg, seed)
        check_params(cfg, self.params)
        self._paths = {}

    def _paths_for(self, H, W):
        if (H, W) not in self._paths:
            self._paths[(H, W)] = generate_continuous_paths(H, W)
        return self._paths[(H, W)]

    def parameters(self):
        return [self.params[n] for n, _ in param_spec(self.cfg)]

    # -- stages --------------------------------------------------------

    def tokenize(self, images: Tensor) -> Tensor:
        cfg, p = self.cfg, self.params
        B, Hi, Wi = images.shape[:3]
        if Hi % cfg.patch or Wi % cfg.patch:
            raise ConfigError(
                f"input {Hi}x{Wi} must be a multiple of the downsample factor {cfg.patch}"
            )
        if cfg.stem == "single":
            tok = ops.conv2d(
                images, p["patch_embed.weight"], p["patch_embed.bias"], stride=cfg.patch
            )
        else:
            tok = images
            for i in range(4):
                tok = ops.conv2d(
                    tok, p[f"stem.{i}.weight"], p[f"stem.{i}.bias"], stride=2, padding=1
                )
                if i < 3:
                    tok = tok.silu()
        H, W = tok.shape[1:3]
        pos = p["pos_embed"]
        if H * W != pos.shape[0]:
            mat = bilinear_resample_matrix((cfg.grid, cfg.grid), (H, W))
            pos = Tensor(mat.astype(images.dtype)) @ pos
        pos_grid = pos.reshape(1, H, W, cfg.d_model).expand(B, H, W, cfg.d_model)
        return tok + pos_grid

    def block_forward(self, grid: Tensor, index: int) -> Tensor:
        cfg = self.cfg
        p = {k.split(".", 2)[2]: v for k, v in self.params.items()
             if k.startswith(f"blocks.{index}.")}
        di = cfg.d_inner
        m = cfg.state_size
        r = cfg.rank
        B, H, W = grid.shape[:3]
        try:
            normed = ops.layernorm(grid, p["norm.gamma"], p["norm.beta"])
            both = ops.linear(normed, p["in_proj.weight"], p["in_proj.bias"])
            xb, zb = both[..., :di], both[..., di:]
            xprime = ops.depthwise_conv2d(xb, p["conv.weight"]).silu()
            projected = ops.linear(xprime, p["x_proj.weight"])
            dt_logits = projected[..., :r]
            b_grid = projected[..., r : r + m]
            c_grid = projected[..., r + m :]
            delta = ops.linear(dt_logits, p["dt_proj.weight"], p["dt_proj.bias"]).softplus()
            core = SsmCore(A=p["A"], D=p["D"], Theta=p["theta"])
            y = direction_aware_scan_2d(
                xprime, b_grid, c_grid, delta, core, self._paths_for(H, W),
                single_skip=cfg.single_skip,
            )
            gated = y * zb.silu()
            out = ops.linear(gated, p["out_proj.weight"], p["out_proj.bias"])
        except NumericalError as e:
            raise NumericalError(f"block {index}: {e}") from e
        return out + grid

    def forward(self, images: Tensor) -> Tensor:
        """[B,Hi,Wi,3] images -> [B,num_classes] logits."""
        grid = self.tokenize(images)
        for i in range(self.cfg.depth):
            grid = self.block_forward(grid, i)
        B, H, W, d = grid.shape
        normed = ops.layernorm(grid, self.params["norm.gamma"], self.params["norm.beta"])
        pooled = normed.reshape(B, H * W, d).mean(axis=1)
        return ops.linear(pooled, self.params["head.weight"], self.params["head.bias"])


def model_forward(image: Tensor, model: Model) -> Tensor:
    """Single image [Hi,Wi,3] -> logits [num_classes]."""
    return model.forward(image.reshape(1, *image.shape))[0]
