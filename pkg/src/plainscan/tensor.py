"""Dense ndarray values with a reverse-mode gradient tape.

Values are numpy arrays (row-major, contiguous, float64 by default) and
each operation records a backward closure, micrograd style.  There is no
implicit broadcasting: binary ops demand identical shapes (python scalars
are the one convenience) and anything else goes through an explicit
``expand``.  Shape violations raise :class:`~plainscan.errors.ShapeError`
naming both operands.

Multiply-accumulate counts can be collected with :func:`count_macs`; the
cost conventions live in ``_record`` call sites and are mirrored by the
analytic counters in :mod:`plainscan.analysis`.
"""

from __future__ import annotations

import contextlib

import numpy as np

from .errors import ShapeError

_mac_stack: list[list[int]] = []


def _record(n: int) -> None:
    for cell in _mac_stack:
        cell[0] += n


class MacTally:
    """Accumulates MAC-equivalents while its context is active."""

    def __init__(self):
        self._cell = [0]

    @property
    def total(self) -> int:
        return self._cell[0]


@contextlib.contextmanager
def count_macs():
    tally = MacTally()
    _mac_stack.append(tally._cell)
    try:
        yield tally
    finally:
        # contexts nest LIFO; remove by identity, not list equality
        for i in range(len(_mac_stack) - 1, -1, -1):
            if _mac_stack[i] is tally._cell:
                del _mac_stack[i]
                break


def _phi(z):
    """expm1(z)/z with a series fallback near zero (avoids cancellation)."""
    small = np.abs(z) < 1e-4
    zs = np.where(small, 1.0, z)  # dodge 0/0 in the dead branch
    return np.where(small, 1.0 + z / 2.0 + z * z / 6.0, np.expm1(zs) / zs)


def _phi_prime(z):
    small = np.abs(z) < 1e-4
    zs = np.where(small, 1.0, z)
    exact = (np.exp(zs) * (zs - 1.0) + 1.0) / (zs * zs)
    return np.where(small, 0.5 + z / 3.0 + z * z / 8.0, exact)


def _softplus(x):
    # For x > 20, log1p(exp(x)) == x to double precision headroom; the
    # rewritten branch keeps exp() off large arguments.
    big = x > 20.0
    xs = np.where(big, 0.0, x)
    return np.where(big, x + np.log1p(np.exp(-np.abs(x))), np.log1p(np.exp(xs)))


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


class Tensor:
    """A node in the gradient graph wrapping one ndarray value."""

    __slots__ = ("data", "grad", "_parents", "_backward", "name")

    def __init__(self, data, parents=(), backward=None, name=None, dtype=None):
        if isinstance(data, Tensor):
            raise TypeError("wrap ndarrays, not Tensors")
        self.data = np.asarray(data, dtype=dtype or np.float64)
        self.grad = None
        self._parents = parents
        self._backward = backward
        self.name = name

    # -- introspection -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, name={self.name!r})"

    def item(self):
        return float(self.data)

    # -- graph machinery ----------------------------------------------

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self, grad=None):
        """Reverse sweep; visits every reachable node exactly once."""
        if grad is None:
            if self.data.size != 1:
                raise ShapeError(
                    f"backward() without a seed gradient needs a scalar, got shape {self.data.shape}"
                )
            grad = np.ones_like(self.data)
        # Iterative post-order: scan recurrences make graphs deeper than
        # the interpreter's recursion limit.
        topo, seen, stack = [], set(), [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self._accumulate(np.asarray(grad, dtype=self.data.dtype))
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)

    # -- helpers -------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Tensor):
            if other.shape != self.shape and other.size != 1 and self.size != 1:
                raise ShapeError(
                    f"elementwise op needs matching shapes, got {self.shape} vs {other.shape}"
                )
            return other
        arr = np.asarray(other, dtype=self.dtype)
        if arr.ndim != 0:
            raise ShapeError(
                "only python scalars auto-wrap; use expand() for broadcasting"
            )
        return Tensor(arr)

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        out = Tensor(self.data + other.data, (self, other))

        def bwd(g):
            self._accumulate(g if self.size > 1 else g.sum())
            other._accumulate(g if other.size > 1 else g.sum())

        out._backward = bwd
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Tensor(-self.data, (self,))
        out._backward = lambda g: self._accumulate(-g)
        return out

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        _record(max(self.size, other.size))
        out = Tensor(self.data * other.data, (self, other))

        def bwd(g):
            ga = g * other.data
            gb = g * self.data
            self._accumulate(ga if self.size > 1 else ga.sum())
            other._accumulate(gb if other.size > 1 else gb.sum())

        out._backward = bwd
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        _record(max(self.size, other.size))
        out = Tensor(self.data / other.data, (self, other))

        def bwd(g):
            ga = g / other.data
            gb = -g * self.data / (other.data * other.data)
            self._accumulate(ga if self.size > 1 else ga.sum())
            other._accumulate(gb if other.size > 1 else gb.sum())

        out._backward = bwd
        return out

    def __pow__(self, p):
        if not isinstance(p, (int, float)):
            raise TypeError("only scalar exponents")
        _record(self.size)
        out = Tensor(self.data**p, (self,))
        out._backward = lambda g: self._accumulate(g * p * self.data ** (p - 1))
        return out

    def __matmul__(self, other):
        if not isinstance(other, Tensor):
            other = Tensor(np.asarray(other, dtype=self.dtype))
        if self.data.ndim != 2 or other.data.ndim != 2:
            raise ShapeError(
                f"matmul expects 2-D operands, got {self.shape} and {other.shape}"
            )
        if self.shape[1] != other.shape[0]:
            raise ShapeError(
                f"matmul inner dimensions disagree: {self.shape} @ {other.shape}"
            )
        n, k = self.shape
        p = other.shape[1]
        _record(n * k * p)
        out = Tensor(self.data @ other.data, (self, other))

        def bwd(g):
            self._accumulate(g @ other.data.T)
            other._accumulate(self.data.T @ g)

        out._backward = bwd
        return out

    # -- pointwise nonlinearities -------------------------------------

    def exp(self):
        _record(self.size)
        out = Tensor(np.exp(self.data), (self,))
        out._backward = lambda g: self._accumulate(g * out.data)
        return out

    def log(self):
        _record(self.size)
        out = Tensor(np.log(self.data), (self,))
        out._backward = lambda g: self._accumulate(g / self.data)
        return out

    def sigmoid(self):
        _record(self.size)
        s = _sigmoid(self.data)
        out = Tensor(s, (self,))
        out._backward = lambda g: self._accumulate(g * s * (1.0 - s))
        return out

    def silu(self):
        _record(2 * self.size)
        s = _sigmoid(self.data)
        out = Tensor(self.data * s, (self,))
        out._backward = lambda g: self._accumulate(g * s * (1.0 + self.data * (1.0 - s)))
        return out

    def softplus(self):
        _record(self.size)
        out = Tensor(_softplus(self.data), (self,))
        out._backward = lambda g: self._accumulate(g * _sigmoid(self.data))
        return out

    def zoh_phi(self):
        """expm1(z)/z, the factor turning Delta*B into B_bar under ZOH."""
        _record(self.size)
        out = Tensor(_phi(self.data), (self,))
        out._backward = lambda g: self._accumulate(g * _phi_prime(self.data))
        return out

    # -- shape manipulation (zero-cost) -------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        old = self.shape
        out = Tensor(self.data.reshape(shape), (self,))
        out._backward = lambda g: self._accumulate(g.reshape(old))
        return out

    def transpose(self, *axes):
        if not axes:
            axes = tuple(reversed(range(self.data.ndim)))
        elif len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        inv = np.argsort(axes)
        out = Tensor(np.ascontiguousarray(self.data.transpose(axes)), (self,))
        out._backward = lambda g: self._accumulate(g.transpose(inv))
        return out

    def expand(self, *shape):
        """Explicit broadcast to `shape`; the gradient sums the copies."""
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        try:
            data = np.broadcast_to(self.data, shape)
        except ValueError as e:
            raise ShapeError(f"cannot expand {self.shape} to {shape}: {e}") from None
        old = self.shape
        lead = len(shape) - len(old)
        axes = tuple(range(lead)) + tuple(
            lead + i for i, d in enumerate(old) if d == 1 and shape[lead + i] != 1
        )
        out = Tensor(np.ascontiguousarray(data), (self,))

        def bwd(g):
            self._accumulate(g.sum(axis=axes).reshape(old) if axes else g)

        out._backward = bwd
        return out

    def __getitem__(self, idx):
        out = Tensor(np.ascontiguousarray(self.data[idx]), (self,))

        def bwd(g):
            full = np.zeros_like(self.data)
            full[idx] += g
            self._accumulate(full)

        out._backward = bwd
        return out

    def take(self, indices, axis=0):
        """Gather along an axis; the gradient scatter-adds back."""
        indices = np.asarray(indices)
        out = Tensor(np.take(self.data, indices, axis=axis), (self,))

        def bwd(g):
            full = np.zeros_like(self.data)
            moved = np.moveaxis(full, axis, 0)
            np.add.at(moved, indices, np.moveaxis(g, axis, 0))
            self._accumulate(full)

        out._backward = bwd
        return out

    # -- reductions ----------------------------------------------------

    def sum(self, axis=None, keepdims=False):
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims), (self,))
        shape = self.shape

        def bwd(g):
            if axis is None:
                self._accumulate(np.broadcast_to(g, shape).copy())
                return
            if not keepdims:
                g = np.expand_dims(g, axis)
            self._accumulate(np.broadcast_to(g, shape).copy())

        out._backward = bwd
        return out

    def mean(self, axis=None, keepdims=False):
        n = self.size if axis is None else self.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    # -- constructors --------------------------------------------------

    @staticmethod
    def stack(tensors, axis=0):
        tensors = list(tensors)
        shapes = {t.shape for t in tensors}
        if len(shapes) != 1:
            raise ShapeError(f"stack needs identical shapes, got {sorted(shapes)}")
        out = Tensor(np.stack([t.data for t in tensors], axis=axis), tuple(tensors))

        def bwd(g):
            for i, t in enumerate(tensors):
                t._accumulate(np.take(g, i, axis=axis))

        out._backward = bwd
        return out

    @staticmethod
    def zeros(shape, dtype=np.float64):
        return Tensor(np.zeros(shape, dtype=dtype))


def as_tensor(x, dtype=None):
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x), dtype=dtype)
