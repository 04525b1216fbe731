"""Minimal reverse-mode differentiation over dense numpy arrays.

A :class:`Tensor` wraps a float64 array. When ``requires_grad`` is set, every
operation that consumes it records a backward closure; calling
:meth:`Tensor.backward` on a scalar result walks the graph in reverse
topological order and accumulates ``grad`` on every tracked leaf.

Only the operations the cryptography networks need are provided.
"""

from __future__ import annotations

import numpy as np

DTYPE = np.float64


class ShapeError(ValueError):
    pass


class GradientError(RuntimeError):
    pass


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    # sum out axes that were broadcast in the forward pass
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, _parents=(), _backward=None):
        arr = np.array(data, dtype=DTYPE) if not isinstance(data, np.ndarray) else data
        if arr.dtype != DTYPE:
            arr = arr.astype(DTYPE)
        self.data = arr
        self.requires_grad = requires_grad
        self.grad = None
        self._parents = _parents
        self._backward = _backward

    # -- introspection -------------------------------------------------
    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    def zero_grad(self):
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    # -- graph construction -------------------------------------------
    @staticmethod
    def _make(data, parents, backward):
        tracked = tuple(p for p in parents if p.requires_grad)
        if not tracked:
            return Tensor(data)
        return Tensor(data, requires_grad=True, _parents=tracked, _backward=backward)

    def _accumulate(self, g: np.ndarray):
        self.grad = np.array(g, dtype=DTYPE) if self.grad is None else self.grad + g

    def backward(self, grad=None):
        if not self.requires_grad:
            raise GradientError("backward() called on a tensor that is not tracked")
        if grad is None:
            if self.data.size != 1:
                raise GradientError("backward() without an explicit gradient needs a scalar")
            grad = np.ones_like(self.data)

        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))

        # interior nodes keep their gradient only for the duration of the pass
        pending = {id(self): np.asarray(grad, dtype=DTYPE)}
        for node in reversed(order):
            g = pending.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node._accumulate(g)
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None:
                    continue
                key = id(parent)
                if key in pending:
                    pending[key] = pending[key] + pg
                else:
                    pending[key] = pg

    # -- arithmetic ----------------------------------------------------
    def __add__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        a, b = self, other

        def bw(g):
            out = []
            for p in (a, b):
                if p.requires_grad:
                    out.append(_unbroadcast(g, p.shape))
            return out

        return Tensor._make(a.data + b.data, (a, b), bw)

    __radd__ = __add__

    def __neg__(self):
        return Tensor._make(-self.data, (self,), lambda g: (-g,))

    def __sub__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        return self + (-other)

    def __rsub__(self, other):
        return Tensor(other) + (-self)

    def __mul__(self, other):
        other = other if isinstance(other, Tensor) else Tensor(other)
        a, b = self, other

        def bw(g):
            out = []
            if a.requires_grad:
                out.append(_unbroadcast(g * b.data, a.shape))
            if b.requires_grad:
                out.append(_unbroadcast(g * a.data, b.shape))
            return out

        return Tensor._make(a.data * b.data, (a, b), bw)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            return self * other ** -1.0
        return self * (1.0 / float(other))

    def __pow__(self, exponent: float):
        exponent = float(exponent)
        x = self.data
        return Tensor._make(x ** exponent, (self,), lambda g: (g * exponent * x ** (exponent - 1.0),))

    def __matmul__(self, other):
        return matmul(self, other)

    # -- reductions and elementwise functions ------------------------
    def sum(self, axis=None):
        shape = self.shape
        out = self.data.sum(axis=axis)

        def bw(g):
            if axis is not None:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)

        return Tensor._make(np.asarray(out, dtype=DTYPE), (self,), bw)

    def mean(self, axis=None):
        n = self.data.size if axis is None else self.shape[axis]
        return self.sum(axis) * (1.0 / n)

    def abs(self):
        x = self.data
        return Tensor._make(np.abs(x), (self,), lambda g: (g * np.sign(x),))

    def tanh(self):
        y = np.tanh(self.data)
        return Tensor._make(y, (self,), lambda g: (g * (1.0 - y * y),))

    def sigmoid(self):
        y = _sigmoid(self.data)
        return Tensor._make(y, (self,), lambda g: (g * y * (1.0 - y),))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def tensor(data, requires_grad: bool = False) -> Tensor:
    return Tensor(np.array(data, dtype=DTYPE), requires_grad=requires_grad)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    x, w = a.data, b.data

    def bw(g):
        out = []
        if a.requires_grad:
            out.append(g @ w.T)
        if b.requires_grad:
            out.append(x.T @ g)
        return out

    return Tensor._make(x @ w, (a, b), bw)


def concat(parts, axis: int = -1) -> Tensor:
    parts = [p if isinstance(p, Tensor) else Tensor(p) for p in parts]
    sizes = [p.shape[axis] for p in parts]
    try:
        data = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError as exc:
        raise ShapeError(str(exc)) from None
    splits = np.cumsum(sizes)[:-1]

    def bw(g):
        pieces = np.split(g, splits, axis=axis)
        return [piece for p, piece in zip(parts, pieces) if p.requires_grad]

    return Tensor._make(data, tuple(parts), bw)


def l1_batch_loss(prediction: Tensor, target) -> Tensor:
    """Per-row L1 distance summed over bits, averaged over rows.

    With outputs fixed at 0.5 and ``m`` bits per row this is ``m / 2``,
    the loss of a receiver that guesses.
    """
    target = target if isinstance(target, Tensor) else Tensor(target)
    if prediction.shape != target.shape:
        raise ShapeError(f"prediction {prediction.shape} vs target {target.shape}")
    if prediction.ndim != 2:
        raise ShapeError("expected a [N, m_bits] batch")
    return (target - prediction).abs().sum() * (1.0 / prediction.shape[0])
