"""Input-dependent state-space recurrences.

``selective_scan_ref`` is the literal per-step recurrence and serves as
the oracle; ``selective_scan_fused`` batches the discretization over all
steps and channels but keeps the sequential order.  The 2D variant runs
four snake-order scans, injecting a learnable per-direction vector into
each step's discretized input matrix, and sums the un-permuted outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ShapeError
from .paths import PathSet, apply_path, invert_path
from .tensor import Tensor


@dataclass
class SsmCore:
    """Per-block state-space parameters."""

    A: Tensor       # [d_inner, m], strictly negative (decay rates)
    D: Tensor       # [d_inner], skip coefficients
    Theta: Tensor   # [5, m], direction vectors (4 cardinal + BEGIN)

    def __post_init__(self):
        if self.A.data.ndim != 2:
            raise ShapeError(f"A must be [d_inner, m], got {self.A.shape}")
        d, m = self.A.shape
        if self.D.shape != (d,):
            raise ShapeError(f"D must be [{d}], got {self.D.shape}")
        if self.Theta.shape != (5, m):
            raise ShapeError(f"Theta must be [5, {m}], got {self.Theta.shape}")
        if not (self.A.data < 0).all():
            raise NumericalError("state matrix A must be strictly negative")

    @property
    def d_inner(self):
        return self.A.shape[0]

    @property
    def state_size(self):
        return self.A.shape[1]


@dataclass
class ScanInputs:
    """One flattened sequence plus its per-token scan parameters."""

    x: Tensor          # [N, d_inner]
    B_seq: Tensor      # [N, m]
    C_seq: Tensor      # [N, m]
    Delta_seq: Tensor  # [N, d_inner], positive

    def __post_init__(self):
        n, d = self.x.shape
        m = self.B_seq.shape[1]
        if self.B_seq.shape != (n, m) or self.C_seq.shape != (n, m):
            raise ShapeError(
                f"B/C sequences must be [{n}, m], got {self.B_seq.shape} and {self.C_seq.shape}"
            )
        if self.Delta_seq.shape != (n, d):
            raise ShapeError(f"Delta must be [{n}, {d}], got {self.Delta_seq.shape}")
        if not (self.Delta_seq.data > 0).all():
            raise NumericalError("Delta must be strictly positive (softplus output)")

    @property
    def length(self):
        return self.x.shape[0]


def zoh_discretize(A: Tensor, B_i: Tensor, Delta_i: Tensor):
    """Zero-order-hold step: A_bar = exp(dA), B_bar = phi(dA) * d * B.

    ``phi(z) = expm1(z)/z`` is evaluated with a series fallback near zero,
    so the Delta -> 0 limit is exact (A_bar -> 1, B_bar -> 0).
    """
    d, m = A.shape
    if Delta_i.shape != (d,):
        raise ShapeError(f"Delta_i must be [{d}], got {Delta_i.shape}")
    if B_i.shape != (m,):
        raise ShapeError(f"B_i must be [{m}], got {B_i.shape}")
    if not (Delta_i.data > 0).all():
        raise NumericalError("zoh_discretize: Delta must be strictly positive")
    d_col = Delta_i.reshape(d, 1).expand(d, m)
    z = d_col * A
    A_bar = z.exp()
    B_bar = z.zoh_phi() * (d_col * B_i.reshape(1, m).expand(d, m))
    return A_bar, B_bar


def selective_scan_ref(inputs: ScanInputs, core: SsmCore) -> Tensor:
    """The literal sequential recurrence; oracle for every faster variant."""
    n = inputs.length
    d, m = core.A.shape
    if inputs.x.shape[1] != d:
        raise ShapeError(f"x channels {inputs.x.shape[1]} != core d_inner {d}")
    h = Tensor.zeros((d, m), dtype=core.A.dtype)
    ys = []
    for i in range(n):
        x_i = inputs.x[i]
        A_bar, B_bar = zoh_discretize(core.A, inputs.B_seq[i], inputs.Delta_seq[i])
        h = A_bar * h + B_bar * x_i.reshape(d, 1).expand(d, m)
        y_i = (inputs.C_seq[i].reshape(1, m).expand(d, m) * h).sum(axis=-1) + core.D * x_i
        if not np.isfinite(y_i.data).all():
            raise NumericalError(f"non-finite scan value at step {i}")
        ys.append(y_i)
    return Tensor.stack(ys, axis=0)


def selective_scan_fused(inputs: ScanInputs, core: SsmCore) -> Tensor:
    """Equivalent scan with all per-step discretizations precomputed."""
    n = inputs.length
    d, m = core.A.shape
    if inputs.x.shape[1] != d:
        raise ShapeError(f"x channels {inputs.x.shape[1]} != core d_inner {d}")
    d_all = inputs.Delta_seq.reshape(n, d, 1).expand(n, d, m)
    z = d_all * core.A.reshape(1, d, m).expand(n, d, m)
    A_bar = z.exp()
    B_bar = z.zoh_phi() * (d_all * inputs.B_seq.reshape(n, 1, m).expand(n, d, m))
    Bx = B_bar * inputs.x.reshape(n, d, 1).expand(n, d, m)
    C_all = inputs.C_seq.reshape(n, 1, m).expand(n, d, m)
    h = Tensor.zeros((d, m), dtype=core.A.dtype)
    ys = []
    for i in range(n):
        h = A_bar[i] * h + Bx[i]
        ys.append((C_all[i] * h).sum(axis=-1))
    y = Tensor.stack(ys, axis=0)
    skip = inputs.x * core.D.reshape(1, d).expand(n, d)
    return y + skip


def direction_aware_scan_2d(
    x_grid: Tensor,
    b_grid: Tensor,
    c_grid: Tensor,
    delta_grid: Tensor,
    core: SsmCore,
    paths: PathSet,
    single_skip: bool = False,
) -> Tensor:
    """Four direction-labeled snake scans, summed on the grid.

    Every scan k runs ``h = A_bar h + (B_bar + Theta_bar_k) x`` where
    Theta_bar_k is the step-direction row of the direction table pushed
    through the same ZOH rule as B.  The output is the sum of the four
    un-permuted scans; by default the skip term D*x therefore appears four
    times (``single_skip=True`` adds it once instead).
    """
    d, m = core.A.shape
    batched = x_grid.data.ndim == 4
    if not batched:
        x_grid = x_grid.reshape(1, *x_grid.shape)
        b_grid = b_grid.reshape(1, *b_grid.shape)
        c_grid = c_grid.reshape(1, *c_grid.shape)
        delta_grid = delta_grid.reshape(1, *delta_grid.shape)
    B, H, W = x_grid.shape[:3]
    if (H, W) != (paths.height, paths.width):
        raise ShapeError(
            f"grid {H}x{W} does not match paths for {paths.height}x{paths.width}"
        )
    if x_grid.shape[3] != d:
        raise ShapeError(f"grid channels {x_grid.shape[3]} != core d_inner {d}")
    n = H * W
    K = len(paths.paths)

    xs = Tensor.stack([apply_path(x_grid, p) for p in paths.paths])        # [K,B,N,d]
    bs = Tensor.stack([apply_path(b_grid, p) for p in paths.paths])        # [K,B,N,m]
    cs = Tensor.stack([apply_path(c_grid, p) for p in paths.paths])        # [K,B,N,m]
    ds = Tensor.stack([apply_path(delta_grid, p) for p in paths.paths])    # [K,B,N,d]
    thetas = Tensor.stack(
        [core.Theta.take(p.directions, axis=0) for p in paths.paths]
    )  # [K,N,m]

    full = (K, B, n, d, m)
    d_all = ds.reshape(K, B, n, d, 1).expand(full)
    z = d_all * core.A.reshape(1, 1, 1, d, m).expand(full)
    A_bar = z.exp()
    phi = z.zoh_phi()
    B_bar = phi * (d_all * bs.reshape(K, B, n, 1, m).expand(full))
    Theta_bar = phi * (d_all * thetas.reshape(K, 1, n, 1, m).expand(full))
    Bx = (B_bar + Theta_bar) * xs.reshape(K, B, n, d, 1).expand(full)
    C_all = cs.reshape(K, B, n, 1, m).expand(full)

    h = Tensor.zeros((K, B, d, m), dtype=core.A.dtype)
    ys = []
    for i in range(n):
        sl = (slice(None), slice(None), i)
        h = A_bar[sl] * h + Bx[sl]
        ys.append((C_all[sl] * h).sum(axis=-1))
    y_seq = Tensor.stack(ys, axis=2)  # [K,B,N,d]
    if not single_skip:
        y_seq = y_seq + xs * core.D.reshape(1, 1, 1, d).expand(K, B, n, d)

    total = None
    for k, p in enumerate(paths.paths):
        back = invert_path(y_seq[k], p, paths.inverse_orders[k], batched=True)
        total = back if total is None else total + back
    if single_skip:
        total = total + x_grid * core.D.reshape(1, 1, 1, d).expand(B, H, W, d)
    return total if batched else total.reshape(H, W, d)
