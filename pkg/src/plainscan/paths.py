"""Scan orders over a token grid.

The continuous orders are boustrophedon ("snake") traversals: every step
moves to a 2D-adjacent cell, so the recurrence never jumps across the
image.  Raster orders (plain row-major / column-major) are kept as the
discontinuous baselines; their wrap steps intentionally break adjacency.

Each path carries a per-step direction label; label 4 (BEGIN) marks the
first token and indexes the dedicated direction-parameter row.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError


class Direction(enum.IntEnum):
    RIGHT = 0
    LEFT = 1
    DOWN = 2
    UP = 3
    BEGIN = 4


_DELTAS = {
    (0, 1): Direction.RIGHT,
    (0, -1): Direction.LEFT,
    (1, 0): Direction.DOWN,
    (-1, 0): Direction.UP,
}


@dataclass(frozen=True)
class ScanPath:
    order: np.ndarray       # permutation of 0..H*W-1, row-major flat indices
    directions: np.ndarray  # per-step Direction values, directions[0] == BEGIN
    height: int
    width: int

    def cells(self):
        """(row, col) per step."""
        return np.stack(np.divmod(self.order, self.width), axis=1)

    def is_continuous(self):
        """True when every step moves Manhattan distance 1."""
        return len(self.discontinuities()) == 0

    def discontinuities(self):
        """Step positions whose move from the previous cell is not distance 1."""
        cells = self.cells()
        d = np.abs(np.diff(cells, axis=0)).sum(axis=1)
        return [int(i) + 1 for i in np.nonzero(d != 1)[0]]


@dataclass(frozen=True)
class PathSet:
    paths: tuple  # exactly 4 ScanPath values
    inverse_orders: tuple  # per path: flat index -> position in scan

    def __post_init__(self):
        if len(self.paths) != 4:
            raise ConfigError(f"a PathSet holds exactly 4 paths, got {len(self.paths)}")

    @property
    def height(self):
        return self.paths[0].height

    @property
    def width(self):
        return self.paths[0].width


def _check_extents(H, W):
    if H < 1 or W < 1:
        raise ConfigError(f"grid extents must be at least 1x1, got {H}x{W}")


def _directions_from_order(order, H, W, wrap_label=None):
    rows, cols = np.divmod(order, W)
    dirs = np.empty(len(order), dtype=np.int64)
    dirs[0] = Direction.BEGIN
    for i in range(1, len(order)):
        delta = (int(rows[i] - rows[i - 1]), int(cols[i] - cols[i - 1]))
        if delta in _DELTAS:
            dirs[i] = _DELTAS[delta]
        elif wrap_label is not None:
            dirs[i] = wrap_label
        else:
            raise ConfigError(f"non-adjacent step at position {i} in a continuous path")
    return dirs


def _snake_order(H, W, by_rows):
    rows = []
    if by_rows:
        for r in range(H):
            cols = range(W) if r % 2 == 0 else range(W - 1, -1, -1)
            rows.extend(r * W + c for c in cols)
    else:
        for c in range(W):
            rr = range(H) if c % 2 == 0 else range(H - 1, -1, -1)
            rows.extend(r * W + c for r in rr)
    return np.array(rows, dtype=np.int64)


def _make_path(order, H, W, wrap_label=None):
    return ScanPath(order, _directions_from_order(order, H, W, wrap_label), H, W)


def _pathset(orders, H, W, wrap_labels=None):
    paths = tuple(
        _make_path(o, H, W, None if wrap_labels is None else wrap_labels[i])
        for i, o in enumerate(orders)
    )
    inverses = tuple(np.argsort(p.order) for p in paths)
    return PathSet(paths, inverses)


def generate_continuous_paths(H: int, W: int) -> PathSet:
    """Row-snake, column-snake, and their exact reversals, all from (0,0).

    Reversed paths recompute their direction labels from the reversed
    order, so their first step is BEGIN like any other path.
    """
    _check_extents(H, W)
    row = _snake_order(H, W, by_rows=True)
    col = _snake_order(H, W, by_rows=False)
    return _pathset([row, col, row[::-1].copy(), col[::-1].copy()], H, W)


def generate_raster_paths(H: int, W: int) -> PathSet:
    """Row-major, column-major, and reverses; wrap steps break adjacency.

    Wrap steps are labeled with the path's in-row (or in-column) travel
    direction, the dominant axis of the traversal.
    """
    _check_extents(H, W)
    row = np.arange(H * W, dtype=np.int64)
    col = (np.arange(H * W, dtype=np.int64).reshape(H, W).T).reshape(-1)
    orders = [row, col, row[::-1].copy(), col[::-1].copy()]
    wrap_labels = [Direction.RIGHT, Direction.DOWN, Direction.LEFT, Direction.UP]
    return _pathset(orders, H, W, wrap_labels)


def apply_path(grid, path: ScanPath):
    """Flatten [H,W,...] (or [B,H,W,...]) grid values into scan order."""
    from .tensor import Tensor

    batched = _grid_is_batched(grid, path)
    if batched:
        B = grid.shape[0]
        flat = grid.reshape(B, path.height * path.width, *grid.shape[3:])
        return flat.take(path.order, axis=1)
    flat = grid.reshape(path.height * path.width, *grid.shape[2:])
    return flat.take(path.order, axis=0)


def invert_path(seq, path: ScanPath, inverse_order=None, batched=False):
    """Un-permute a scanned sequence back onto the grid."""
    inv = np.argsort(path.order) if inverse_order is None else inverse_order
    n = path.height * path.width
    axis = 1 if batched else 0
    if seq.shape[axis] != n:
        raise ShapeError(
            f"sequence length {seq.shape[axis]} does not match {path.height}x{path.width} path"
        )
    back = seq.take(inv, axis=axis)
    if batched:
        return back.reshape(seq.shape[0], path.height, path.width, *seq.shape[2:])
    return back.reshape(path.height, path.width, *seq.shape[1:])


def _grid_is_batched(grid, path):
    # check the batched layout first: a 4-D [B,H,W,C] grid with B == H
    # would otherwise be mistaken for an unbatched [H,W,...] one
    if len(grid.shape) >= 4 and grid.shape[1:3] == (path.height, path.width):
        return True
    if grid.shape[:2] == (path.height, path.width):
        return False
    raise ShapeError(
        f"grid shape {grid.shape} does not match {path.height}x{path.width} path"
    )


def render_ascii(path: ScanPath) -> str:
    """Grid of scan positions, one row per grid row."""
    n = path.height * path.width
    width = len(str(n - 1))
    pos = np.argsort(path.order).reshape(path.height, path.width)
    return "\n".join(
        " ".join(f"{pos[r, c]:>{width}d}" for c in range(path.width))
        for r in range(path.height)
    )


def path_csv_rows(paths: PathSet):
    """Rows of (path_id, step, row, col, direction name)."""
    for pid, p in enumerate(paths.paths):
        cells = p.cells()
        for step in range(len(p.order)):
            yield (
                pid,
                step,
                int(cells[step, 0]),
                int(cells[step, 1]),
                Direction(p.directions[step]).name,
            )
