"""Reverse-mode automatic differentiation on numpy buffers.

A Tensor wraps an ndarray and, when gradients are requested, remembers the
operation that produced it. backward() replays the recorded graph once, in
reverse topological order, accumulating adjoints into every tensor that
requires them. Tensors built entirely from non-grad inputs carry no graph at
all, so inference paths (teacher nets, the frozen style network) pay nothing
for the bookkeeping.

float32 is the working precision for training. float64 inputs stay float64,
which is what the finite-difference checker relies on for its high-precision
replay.
"""

import numpy as np


class NumericsError(ArithmeticError):
    """A non-finite value appeared where the computation requires finite ones."""


def _coerce(data):
    arr = np.asarray(data)
    if arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(np.float32)
    return arr


def _accumulate(t, g):
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _unbroadcast(g, shape):
    """Sum an upstream gradient over the axes broadcasting expanded."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _check_broadcast(a_shape, b_shape, op):
    try:
        np.broadcast_shapes(a_shape, b_shape)
    except ValueError:
        raise ValueError(f"{op}: shapes {a_shape} and {b_shape} do not broadcast") from None


class Tensor:
    """Dense N-d float array, optionally tracked by the differentiation graph."""

    __slots__ = ("data", "grad", "requires_grad", "op", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, parents=(), op="leaf"):
        self.data = _coerce(data)
        self.grad = None
        self.requires_grad = requires_grad
        self.op = op
        self._parents = parents
        self._backward = None

    # -- introspection -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return self.data.item()

    def detach(self):
        """A view of the same buffer, cut loose from the graph."""
        return Tensor(self.data, requires_grad=False, op="detach")

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op!r}, requires_grad={self.requires_grad})"

    # -- graph construction helper --------------------------------------

    @staticmethod
    def _result(data, parents, op, backward_builder):
        """Wrap an op result; record the graph only if a parent needs grads."""
        if not any(p.requires_grad for p in parents):
            return Tensor(data, requires_grad=False, op=op)
        out = Tensor(data, requires_grad=True, parents=tuple(parents), op=op)
        out._backward = backward_builder(out)
        return out

    # -- elementwise arithmetic -----------------------------------------

    def __add__(self, other):
        if not isinstance(other, Tensor):
            x = self

            def build(out):
                def bw():
                    _accumulate(x, out.grad)
                return bw

            return Tensor._result(self.data + other, (self,), "add", build)
        _check_broadcast(self.shape, other.shape, "add")
        x, y = self, other

        def build(out):
            def bw():
                if x.requires_grad:
                    _accumulate(x, _unbroadcast(out.grad, x.shape))
                if y.requires_grad:
                    _accumulate(y, _unbroadcast(out.grad, y.shape))
            return bw

        return Tensor._result(self.data + other.data, (self, other), "add", build)

    __radd__ = __add__

    def __neg__(self):
        x = self

        def build(out):
            def bw():
                _accumulate(x, -out.grad)
            return bw

        return Tensor._result(-self.data, (self,), "neg", build)

    def __sub__(self, other):
        if not isinstance(other, Tensor):
            return self + (-other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Tensor):
            x = self
            c = other

            def build(out):
                def bw():
                    _accumulate(x, out.grad * c)
                return bw

            return Tensor._result(self.data * c, (self,), "scale", build)
        _check_broadcast(self.shape, other.shape, "mul")
        x, y = self, other

        def build(out):
            def bw():
                if x.requires_grad:
                    _accumulate(x, _unbroadcast(out.grad * y.data, x.shape))
                if y.requires_grad:
                    _accumulate(y, _unbroadcast(out.grad * x.data, y.shape))
            return bw

        return Tensor._result(self.data * other.data, (self, other), "mul", build)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Tensor):
            return self * (1.0 / other)
        _check_broadcast(self.shape, other.shape, "div")
        x, y = self, other

        def build(out):
            def bw():
                if x.requires_grad:
                    _accumulate(x, _unbroadcast(out.grad / y.data, x.shape))
                if y.requires_grad:
                    _accumulate(y, _unbroadcast(-out.grad * out.data / y.data, y.shape))
            return bw

        return Tensor._result(self.data / other.data, (self, other), "div", build)

    def __rtruediv__(self, other):
        x = self

        def build(out):
            def bw():
                _accumulate(x, -out.grad * out.data / x.data)
            return bw

        return Tensor._result(other / self.data, (self,), "rdiv", build)

    def __pow__(self, p):
        if isinstance(p, Tensor):
            raise TypeError("only scalar exponents are supported")
        x = self

        def build(out):
            def bw():
                _accumulate(x, out.grad * p * x.data ** (p - 1))
            return bw

        return Tensor._result(self.data ** p, (self,), "pow", build)

    # -- elementwise nonlinearities --------------------------------------

    def relu(self):
        x = self
        mask = self.data > 0  # subgradient 0 at the origin

        def build(out):
            def bw():
                _accumulate(x, out.grad * mask)
            return bw

        return Tensor._result(np.maximum(self.data, 0), (self,), "relu", build)

    def clip(self, lo, hi):
        if not lo < hi:
            raise ValueError(f"clip: lower bound {lo} must be below upper bound {hi}")
        x = self
        mask = (self.data >= lo) & (self.data <= hi)

        def build(out):
            def bw():
                _accumulate(x, out.grad * mask)
            return bw

        return Tensor._result(np.clip(self.data, lo, hi), (self,), "clip", build)

    def log(self):
        if (self.data <= 0).any():
            raise ValueError("log of non-positive value; add a positive floor first")
        x = self

        def build(out):
            def bw():
                _accumulate(x, out.grad / x.data)
            return bw

        return Tensor._result(np.log(self.data), (self,), "log", build)

    def exp(self):
        x = self

        def build(out):
            def bw():
                _accumulate(x, out.grad * out.data)
            return bw

        return Tensor._result(np.exp(self.data), (self,), "exp", build)

    def sqrt(self):
        x = self

        def build(out):
            def bw():
                _accumulate(x, out.grad * 0.5 / out.data)
            return bw

        return Tensor._result(np.sqrt(self.data), (self,), "sqrt", build)

    # -- reductions and shape --------------------------------------------

    def sum(self, axis=None, keepdims=False):
        x = self

        def build(out):
            def bw():
                g = out.grad
                if axis is not None and not keepdims:
                    g = np.expand_dims(g, axis)
                _accumulate(x, np.broadcast_to(g, x.shape))
            return bw

        return Tensor._result(self.data.sum(axis=axis, keepdims=keepdims),
                              (self,), "sum", build)

    def mean(self, axis=None, keepdims=False):
        if axis is None:
            n = self.size
        else:
            axes = axis if isinstance(axis, tuple) else (axis,)
            n = 1
            for a in axes:
                n *= self.shape[a]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        x = self
        old = self.shape

        def build(out):
            def bw():
                _accumulate(x, out.grad.reshape(old))
            return bw

        return Tensor._result(self.data.reshape(shape), (self,), "reshape", build)

    # -- backward pass -----------------------------------------------------

    def backward(self):
        """Accumulate d(self)/d(leaf) into .grad of every tracked ancestor.

        self must be scalar. Raises NumericsError, naming the offending node,
        if a non-finite value shows up in any adjoint.
        """
        if self.size != 1:
            raise ValueError(f"backward requires a scalar, got shape {self.shape}")
        if not np.isfinite(self.data).all():
            raise NumericsError("backward called on a non-finite value")
        if not self.requires_grad:
            return

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
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))

        self.grad = np.ones_like(self.data)
        for i, node in enumerate(reversed(order)):
            if node._backward is None:
                continue
            if node.grad is None:
                continue
            if not np.isfinite(node.grad).all():
                raise NumericsError(
                    f"non-finite gradient at node {len(order) - 1 - i} (op {node.op!r})")
            node._backward()


def tensor(data, requires_grad=False, dtype=np.float32):
    """Build a leaf tensor with an explicit dtype (float32 by default)."""
    return Tensor(np.asarray(data, dtype=dtype), requires_grad=requires_grad)
