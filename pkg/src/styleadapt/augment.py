"""Photometric jitter and random cropping with explicit RNG streams.

The jitter is a per-channel affine map a*x + b clipped back to [0, 1]; it is
the weak, semantics-preserving perturbation applied before every forward pass
of a training image. Label maps are never touched by the photometric path.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class ColorJitterSpec:
    """Multiplicative and additive jitter ranges; identity must be reachable."""

    brightness_lo: float = 0.8
    brightness_hi: float = 1.2
    shift_lo: float = -0.1
    shift_hi: float = 0.1
    per_channel: bool = True

    def validate(self):
        if not (self.brightness_lo <= 1.0 <= self.brightness_hi):
            raise ValueError("brightness range must contain 1.0")
        if not (self.shift_lo <= 0.0 <= self.shift_hi):
            raise ValueError("shift range must contain 0.0")
        return self


def color_perturb(img, spec, rng):
    """Random per-channel affine recolouring of a unit-range image."""
    n = 3 if spec.per_channel else 1
    a = rng.uniform(spec.brightness_lo, spec.brightness_hi, size=n).astype(np.float32)
    b = rng.uniform(spec.shift_lo, spec.shift_hi, size=n).astype(np.float32)
    out = img * a + b
    return np.clip(out, 0.0, 1.0)


def random_crop(img, label, out_h, out_w, rng):
    """Crop the same window from an image and its (optional) label map."""
    h, w = img.shape[:2]
    if out_h > h or out_w > w:
        raise ValueError(f"crop {out_h}x{out_w} exceeds image {h}x{w}")
    if out_h % 4 or out_w % 4:
        raise ValueError(f"crop dims must be divisible by 4, got {out_h}x{out_w}")
    dy = int(rng.integers(0, h - out_h + 1))
    dx = int(rng.integers(0, w - out_w + 1))
    img_out = img[dy:dy + out_h, dx:dx + out_w]
    lab_out = None if label is None else label[dy:dy + out_h, dx:dx + out_w]
    return img_out, lab_out
