"""Conversions between HWC unit-range images and NCHW tensors, plus PSNR."""

import numpy as np

from .tensor import Tensor


def check_image(img):
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an HxWx3 image, got shape {img.shape}")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("image values must lie in [0, 1]")


def to_nchw(img, requires_grad=False):
    """H x W x 3 float image -> 1 x 3 x H x W tensor."""
    arr = np.ascontiguousarray(np.transpose(np.asarray(img, dtype=np.float32), (2, 0, 1))[None])
    return Tensor(arr, requires_grad=requires_grad)


def from_nchw(t):
    """1 x 3 x H x W tensor or array -> H x W x 3 float image."""
    arr = t.data if isinstance(t, Tensor) else np.asarray(t)
    if arr.ndim != 4 or arr.shape[0] != 1 or arr.shape[1] != 3:
        raise ValueError(f"expected a 1x3xHxW array, got shape {arr.shape}")
    return np.ascontiguousarray(np.transpose(arr[0], (1, 2, 0)))


def psnr(a, b):
    """Peak signal-to-noise ratio in dB for unit-range images."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"psnr needs equal shapes, got {a.shape} and {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(1.0 / mse)
