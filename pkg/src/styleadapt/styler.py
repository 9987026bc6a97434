"""Continuous style-blending image generator.

A small fixed encoder turns an image into a 64-channel feature map at 1/4
resolution; the decoder mirrors it with nearest upsampling. Translation
re-statisticises the content features to the style image's per-channel
moments (adain) and decodes a convex blend of original and re-statisticised
features, so one scalar alpha walks the output continuously from a plain
reconstruction (alpha 0) to a full style transfer (alpha 1).

The encoder is trained once as half of a plain autoencoder over the pooled
unlabeled images, then frozen; only the decoder learns the style objective.
"""

import numpy as np

from . import ops
from .augment import random_crop
from .images import check_image, from_nchw, to_nchw
from .layers import add_conv, conv
from .optim import ParamSet
from .rng import RngStream

DEFAULT_EPSILON = 1e-5


class StylerNet:
    """Frozen-encoder / trainable-decoder translation network."""

    def __init__(self, encoder, decoder, epsilon=DEFAULT_EPSILON):
        self.encoder = encoder
        self.decoder = decoder
        self.epsilon = epsilon

    def encode(self, x, stages=False):
        """Feature pyramid of an NCHW batch; final stage is 64ch at 1/4 size."""
        if x.shape[2] % 4 or x.shape[3] % 4:
            raise ValueError(f"encoder needs spatial dims divisible by 4, got {x.shape}")
        s1 = conv(self.encoder, "e1", x).relu()
        s2 = conv(self.encoder, "e2", ops.maxpool2(s1)).relu()
        s3 = conv(self.encoder, "e3", ops.maxpool2(s2)).relu()
        return [s1, s2, s3] if stages else s3

    def decode(self, t):
        d1 = conv(self.decoder, "d1", t).relu()
        d2 = conv(self.decoder, "d2", ops.upsample_nearest2(d1)).relu()
        return conv(self.decoder, "d3", ops.upsample_nearest2(d2))

    def all_params(self):
        merged = ParamSet()
        for name, t in self.encoder.items():
            merged.add(name, t)
        for name, t in self.decoder.items():
            merged.add(name, t)
        return merged

    def freeze_encoder(self):
        self.encoder.set_requires_grad(False)

    def freeze(self):
        self.encoder.set_requires_grad(False)
        self.decoder.set_requires_grad(False)


def build_styler(seed, epsilon=DEFAULT_EPSILON):
    rng = RngStream("init.styler", seed)
    enc = ParamSet()
    add_conv(enc, "e1", 3, 16, 3, rng)
    add_conv(enc, "e2", 16, 32, 3, rng)
    add_conv(enc, "e3", 32, 64, 3, rng)
    dec = ParamSet()
    add_conv(dec, "d1", 64, 32, 3, rng)
    add_conv(dec, "d2", 32, 16, 3, rng)
    add_conv(dec, "d3", 16, 3, 3, rng)
    return StylerNet(enc, dec, epsilon)


def adain(t_c, t_s, eps=DEFAULT_EPSILON):
    """Re-statisticise content features to the style features' moments.

    Per channel: sigma(t_s) * (t_c - mu(t_c)) / sigma(t_c) + mu(t_s). Spatial
    sizes of the two maps may differ; channel counts must match.
    """
    if t_c.shape[1] != t_s.shape[1]:
        raise ValueError(f"adain channel mismatch: {t_c.shape[1]} vs {t_s.shape[1]}")
    if t_c.shape[0] != t_s.shape[0]:
        raise ValueError(f"adain batch mismatch: {t_c.shape[0]} vs {t_s.shape[0]}")
    n, c = t_c.shape[0], t_c.shape[1]
    mu_c, sig_c = ops.channel_moments(t_c, eps)
    mu_s, sig_s = ops.channel_moments(t_s, eps)
    normalized = (t_c - mu_c.reshape(n, c, 1, 1)) / sig_c.reshape(n, c, 1, 1)
    return normalized * sig_s.reshape(n, c, 1, 1) + mu_s.reshape(n, c, 1, 1)


def generate(c_img, s_img, alpha, net):
    """Translate content image toward the style image's appearance.

    Decodes alpha * adain(f(c), f(s)) + (1 - alpha) * f(c) and clips the
    result back to the unit range. alpha 0 reproduces the reconstruction
    path; alpha 1 is the full transfer.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    check_image(c_img)
    check_image(s_img)
    t_c = net.encode(to_nchw(c_img))
    t_s = net.encode(to_nchw(s_img))
    t_hat = adain(t_c, t_s, net.epsilon)
    mixed = t_hat * float(alpha) + t_c * float(1.0 - alpha)
    out = net.decode(mixed).clip(0.0, 1.0)
    return from_nchw(out)


def styler_loss_terms(c_img, s_img, net):
    """(content, style) loss tensors for one content/style pair.

    Content: mean squared error between the decoded image's features and the
    adain target. Style: per-stage mean squared moment mismatch against the
    style image, summed over the three encoder stages.
    """
    stages_c = net.encode(to_nchw(c_img), stages=True)
    stages_s = net.encode(to_nchw(s_img), stages=True)
    t_hat = adain(stages_c[-1], stages_s[-1], net.epsilon)
    out = net.decode(t_hat)
    stages_out = net.encode(out, stages=True)

    diff = stages_out[-1] - t_hat
    content = (diff * diff).mean()

    style = None
    for f_out, f_s in zip(stages_out, stages_s):
        mu_o, sig_o = ops.channel_moments(f_out, net.epsilon)
        mu_s, sig_s = ops.channel_moments(f_s, net.epsilon)
        dm = mu_o - mu_s
        ds = sig_o - sig_s
        term = (dm * dm).mean() + (ds * ds).mean()
        style = term if style is None else style + term
    return content, style


def styler_loss(c_img, s_img, net, style_weight):
    content, style = styler_loss_terms(c_img, s_img, net)
    return content + style * style_weight


def pretrain_autoencoder(pool, net, opt, steps, crop=64, rng=None):
    """Reconstruction warm-up for encoder and decoder together."""
    if not pool:
        raise ValueError("empty image pool")
    rng = rng or RngStream("styler.pretrain", 0)
    records = []
    for step in range(steps):
        img = pool[int(rng.integers(0, len(pool)))]
        patch, _ = random_crop(img, None, crop, crop, rng)
        x = to_nchw(patch)
        out = net.decode(net.encode(x))
        diff = out - x
        loss = (diff * diff).mean()
        loss.backward()
        opt.step()
        records.append({"step": step, "loss": loss.item()})
    return records


def train_styler(pool, net, opt, steps, crop=64, style_weight=0.1, rng=None):
    """Train the decoder on the style objective over random image pairs.

    The encoder must already be frozen; opt is expected to cover the decoder
    parameters only.
    """
    if not pool:
        raise ValueError("empty image pool")
    rng = rng or RngStream("styler.train", 0)
    net.freeze_encoder()
    records = []
    for step in range(steps):
        ci = int(rng.integers(0, len(pool)))
        si = int(rng.integers(0, len(pool)))
        c_patch, _ = random_crop(pool[ci], None, crop, crop, rng)
        s_patch, _ = random_crop(pool[si], None, crop, crop, rng)
        loss = styler_loss(c_patch, s_patch, net, style_weight)
        loss.backward()
        opt.step()
        records.append({"step": step, "loss": loss.item()})
    return records
