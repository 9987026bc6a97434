"""Named parameter collections and first-order optimizers."""

import numpy as np

from .tensor import Tensor


class ParamSet:
    """Ordered name -> Tensor map holding a network's trainable arrays."""

    def __init__(self):
        self._items = {}

    def add(self, name, t):
        if name in self._items:
            raise ValueError(f"duplicate parameter name {name!r}")
        self._items[name] = t
        return t

    def __getitem__(self, name):
        return self._items[name]

    def __contains__(self, name):
        return name in self._items

    def __len__(self):
        return len(self._items)

    def names(self):
        return list(self._items)

    def items(self):
        return self._items.items()

    def tensors(self):
        return list(self._items.values())

    def zero_grad(self):
        for t in self._items.values():
            t.grad = None

    def set_requires_grad(self, flag):
        for t in self._items.values():
            t.requires_grad = flag
            if not flag:
                t.grad = None

    def copy(self, requires_grad=None):
        """Deep copy of every array; gradient flags optionally overridden."""
        out = ParamSet()
        for name, t in self._items.items():
            rg = t.requires_grad if requires_grad is None else requires_grad
            out.add(name, Tensor(t.data.copy(), requires_grad=rg))
        return out

    def count(self):
        return sum(t.size for t in self._items.values())


def _grad_or_raise(name, t):
    if t.grad is None:
        raise ValueError(f"parameter {name!r} has no gradient; run backward first")
    return t.grad


class SGD:
    """Stochastic gradient descent with classical momentum and L2 decay."""

    def __init__(self, params, lr, momentum=0.0, weight_decay=0.0):
        self.params = params
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.step_count = 0
        self._velocity = {name: np.zeros_like(t.data) for name, t in params.items()}

    def step(self):
        for name, t in self.params.items():
            g = _grad_or_raise(name, t)
            if self.weight_decay:
                g = g + self.weight_decay * t.data
            v = self._velocity[name]
            v *= self.momentum
            v += g
            t.data -= self.lr * v
        self.step_count += 1
        self.params.zero_grad()


class Adam:
    """Adam with bias correction and L2 decay folded into the gradient."""

    def __init__(self, params, lr, betas=(0.9, 0.999), weight_decay=0.0, eps=1e-8):
        self.params = params
        self.lr = lr
        self.betas = betas
        self.weight_decay = weight_decay
        self.eps = eps
        self.step_count = 0
        self._m = {name: np.zeros_like(t.data) for name, t in params.items()}
        self._v = {name: np.zeros_like(t.data) for name, t in params.items()}

    def step(self):
        b1, b2 = self.betas
        self.step_count += 1
        c1 = 1.0 - b1 ** self.step_count
        c2 = 1.0 - b2 ** self.step_count
        for name, t in self.params.items():
            g = _grad_or_raise(name, t)
            if self.weight_decay:
                g = g + self.weight_decay * t.data
            m = self._m[name]
            v = self._v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            t.data -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
        self.params.zero_grad()


def make_optimizer(kind, params, lr, momentum=0.9, beta2=0.999, weight_decay=0.0):
    """Build the optimizer named by ``kind`` ("adam" or "sgd")."""
    if kind == "adam":
        return Adam(params, lr=lr, betas=(momentum, beta2), weight_decay=weight_decay)
    if kind == "sgd":
        return SGD(params, lr=lr, momentum=momentum, weight_decay=weight_decay)
    raise ValueError(f"unknown optimizer kind {kind!r}")
