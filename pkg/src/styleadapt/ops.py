"""Structured differentiable operations: convolution, pooling, softmax, moments.

Everything works on NCHW tensors. Convolution is cross-correlation lowered to
one batched matmul per call (im2col); the backward pass reuses the saved
column buffer, so only graphs that actually need gradients pay for it.
"""

import numpy as np

from .tensor import Tensor, _accumulate


def _im2col(xd, k, stride, padding):
    """Unfold k x k windows of a padded NCHW array into (N, C*k*k, Ho*Wo)."""
    n, c, h, w = xd.shape
    if padding:
        xd = np.pad(xd, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    ho = (h + 2 * padding - k) // stride + 1
    wo = (w + 2 * padding - k) // stride + 1
    sn, sc, sh, sw = xd.strides
    windows = np.lib.stride_tricks.as_strided(
        xd,
        (n, c, k, k, ho, wo),
        (sn, sc, sh, sw, sh * stride, sw * stride),
    )
    cols = np.ascontiguousarray(windows).reshape(n, c * k * k, ho * wo)
    return cols, ho, wo, xd.shape


def _col2im(dcols, x_shape, pad_shape, k, stride, padding):
    """Scatter column gradients back onto the (unpadded) input array."""
    n, c, h, w = x_shape
    ho = (pad_shape[2] - k) // stride + 1
    wo = (pad_shape[3] - k) // stride + 1
    dx = np.zeros(pad_shape, dtype=dcols.dtype)
    blocks = dcols.reshape(n, c, k, k, ho, wo)
    for ky in range(k):
        for kx in range(k):
            dx[:, :, ky:ky + stride * ho:stride, kx:kx + stride * wo:stride] += blocks[:, :, ky, kx]
    if padding:
        dx = dx[:, :, padding:padding + h, padding:padding + w]
    return dx


def conv2d(x, w, b, stride=1, padding=0):
    """Cross-correlate NCHW input with OIKK weights, add per-channel bias.

    Output spatial extent is floor((H + 2*pad - K) / stride) + 1.
    """
    if x.ndim != 4 or w.ndim != 4:
        raise ValueError(f"conv2d expects 4-d input and weight, got {x.shape} and {w.shape}")
    n, c, h, wid = x.shape
    o, i, k, k2 = w.shape
    if k != k2:
        raise ValueError(f"conv2d kernel must be square, got {w.shape}")
    if c != i:
        raise ValueError(f"conv2d channel mismatch: input has {c}, weight expects {i}")
    if b.shape != (o,):
        raise ValueError(f"conv2d bias must have shape ({o},), got {b.shape}")
    ho = (h + 2 * padding - k) // stride + 1
    wo = (wid + 2 * padding - k) // stride + 1
    if ho < 1 or wo < 1 or h + 2 * padding < k or wid + 2 * padding < k:
        raise ValueError(f"conv2d output would be empty for input {x.shape}, kernel {k}, "
                         f"stride {stride}, padding {padding}")

    cols, ho, wo, pad_shape = _im2col(x.data, k, stride, padding)
    wmat = w.data.reshape(o, c * k * k)
    out_data = np.matmul(wmat[None], cols).reshape(n, o, ho, wo) + b.data.reshape(1, o, 1, 1)

    def build(out):
        def bw():
            g = out.grad.reshape(n, o, ho * wo)
            if b.requires_grad:
                _accumulate(b, g.sum(axis=(0, 2)))
            if w.requires_grad:
                dw = np.matmul(g, cols.transpose(0, 2, 1)).sum(axis=0)
                _accumulate(w, dw.reshape(w.shape))
            if x.requires_grad:
                dcols = np.matmul(wmat.T[None], g)
                _accumulate(x, _col2im(dcols, x.shape, pad_shape, k, stride, padding))
        return bw

    return Tensor._result(out_data, (x, w, b), "conv2d", build)


def maxpool2(x):
    """2x2 max pooling with stride 2; gradient routes to the first max per window."""
    if x.ndim != 4:
        raise ValueError(f"maxpool2 expects NCHW input, got shape {x.shape}")
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ValueError(f"maxpool2 needs even spatial dims, got {h}x{w}")
    windows = x.data.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    flat = windows.reshape(n, c, h // 2, w // 2, 4)
    idx = flat.argmax(axis=-1)  # first occurrence on ties, row-major in-window
    out_data = np.take_along_axis(flat, idx[..., None], axis=-1)[..., 0]

    def build(out):
        def bw():
            dflat = np.zeros_like(flat)
            np.put_along_axis(dflat, idx[..., None], out.grad[..., None], axis=-1)
            dx = dflat.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
            _accumulate(x, dx.reshape(n, c, h, w))
        return bw

    return Tensor._result(np.ascontiguousarray(out_data), (x,), "maxpool2", build)


def upsample_nearest2(x):
    """Double spatial dims by nearest neighbour; gradient sums each 2x2 block."""
    if x.ndim != 4:
        raise ValueError(f"upsample_nearest2 expects NCHW input, got shape {x.shape}")
    n, c, h, w = x.shape
    out_data = np.repeat(np.repeat(x.data, 2, axis=2), 2, axis=3)

    def build(out):
        def bw():
            _accumulate(x, out.grad.reshape(n, c, h, 2, w, 2).sum(axis=(3, 5)))
        return bw

    return Tensor._result(out_data, (x,), "upsample_nearest2", build)


def softmax_channels(x):
    """Per-pixel distribution over the channel axis, stabilised by max shift."""
    if x.ndim != 4:
        raise ValueError(f"softmax_channels expects NCHW input, got shape {x.shape}")
    if x.shape[1] < 2:
        raise ValueError("softmax_channels needs at least two channels")
    z = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=1, keepdims=True)

    def build(out):
        def bw():
            inner = (out.grad * p).sum(axis=1, keepdims=True)
            _accumulate(x, p * (out.grad - inner))
        return bw

    return Tensor._result(p, (x,), "softmax_channels", build)


def channel_moments(x, eps):
    """Spatial mean and epsilon-guarded standard deviation per (n, c) channel.

    sigma = sqrt(variance + eps), so constant channels stay differentiable;
    sigma is never below sqrt(eps).
    """
    if x.ndim != 4:
        raise ValueError(f"channel_moments expects NCHW input, got shape {x.shape}")
    if eps <= 0:
        raise ValueError(f"channel_moments needs eps > 0, got {eps}")
    n, c, h, w = x.shape
    if h * w < 1:
        raise ValueError("channel_moments needs at least one spatial element")
    mu = x.mean(axis=(2, 3))
    centered = x - mu.reshape(n, c, 1, 1)
    var = (centered * centered).mean(axis=(2, 3))
    sigma = (var + eps).sqrt()
    return mu, sigma
