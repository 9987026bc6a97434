"""Convolution layer helpers shared by the style and segmentation networks."""

import numpy as np

from . import ops
from .optim import ParamSet
from .tensor import Tensor


def add_conv(params, name, c_in, c_out, k, rng):
    """Register He fan-in initialised weights and a zero bias under ``name``."""
    fan_in = c_in * k * k
    w = rng.normal(scale=np.sqrt(2.0 / fan_in), size=(c_out, c_in, k, k)).astype(np.float32)
    params.add(f"{name}.w", Tensor(w, requires_grad=True))
    params.add(f"{name}.b", Tensor(np.zeros(c_out, dtype=np.float32), requires_grad=True))


def conv(params, name, x, stride=1, padding=None):
    """Apply the named convolution; padding defaults to "same" (k // 2)."""
    w = params[f"{name}.w"]
    if padding is None:
        padding = w.shape[2] // 2
    return ops.conv2d(x, w, params[f"{name}.b"], stride=stride, padding=padding)
