"""Procedural two-domain segmentation benchmark and its on-disk format.

Scenes are flat-colored: a horizontal stripe band plus a handful of mutually
non-overlapping shapes (circle, rectangle, triangle) over background, each
class keyed to one palette color. The source domain renders the palette
untouched; the target domain rotates hues, applies a gamma curve and adds
pixel noise, so the appearance gap is mostly a global color-statistics shift
while the label geometry stays identically distributed. Class pixel mass is
deliberately skewed (background dominates, triangles are rare) so that
inverse-prior loss reweighting has something to do.

Images are stored as binary PPM (P6), labels as binary PGM (P5) with raw
class indices, both with maxval 255.
"""

import os
from dataclasses import dataclass

import numpy as np

from .rng import RngStream
from .trainer import ClassPriors

CLASS_NAMES = ("background", "stripe", "circle", "rectangle", "triangle")
NUM_CLASSES = len(CLASS_NAMES)

MIN_PALETTE_DISTANCE = 0.15


class NetpbmError(ValueError):
    """Malformed or out-of-contract PPM/PGM content."""


@dataclass
class DomainSpec:
    """Rendering recipe for one domain."""

    name: str
    palette: np.ndarray              # (NUM_CLASSES, 3) base color per class
    hue_shift: float = 0.0           # rotation angle (radians) about the gray axis
    gamma: float = 1.0
    noise_sigma: float = 0.0
    shape_frequencies: tuple = (0.45, 0.40, 0.15)   # circle, rectangle, triangle

    def validate(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        pal = np.asarray(self.palette, dtype=np.float32)
        if pal.shape != (NUM_CLASSES, 3):
            raise ValueError(f"palette must be {NUM_CLASSES}x3, got {pal.shape}")
        for i in range(NUM_CLASSES):
            for j in range(i + 1, NUM_CLASSES):
                if np.linalg.norm(pal[i] - pal[j]) < MIN_PALETTE_DISTANCE:
                    raise ValueError(f"palette colors {i} and {j} are too close")
        return self


_BASE_PALETTE = np.array([
    [0.35, 0.35, 0.35],   # background: on the gray axis, hue-rotation stable
    [0.75, 0.15, 0.15],   # stripe
    [0.15, 0.70, 0.20],   # circle
    [0.15, 0.25, 0.80],   # rectangle
    [0.80, 0.75, 0.15],   # triangle
], dtype=np.float32)


def synth_a():
    """Source domain: clean saturated palette, no distortion."""
    return DomainSpec(name="synthA", palette=_BASE_PALETTE.copy()).validate()


_CAST_GAIN = np.array([0.55, 0.85, 1.30], dtype=np.float32)
_CAST_SHIFT = np.array([0.02, 0.00, 0.08], dtype=np.float32)


def real_b():
    """Target domain: color-cast palette, mild hue shift, gamma curve, noise.

    The palette cast (strong red suppression, blue boost) dominates the gap
    and sits far outside the training-time jitter ranges.
    """
    palette = np.clip(_BASE_PALETTE * _CAST_GAIN + _CAST_SHIFT, 0.0, 1.0)
    return DomainSpec(name="realB", palette=palette,
                      hue_shift=0.35, gamma=1.3, noise_sigma=0.05).validate()


BUILTIN_DOMAINS = {"synthA": synth_a, "realB": real_b}


@dataclass
class Scene:
    image: np.ndarray   # (h, w, 3) float32 in [0, 1]
    label: np.ndarray   # (h, w) uint8 in [0, NUM_CLASSES)


def _hue_rotation(theta):
    """3x3 rotation of RGB space about the gray (1,1,1) axis."""
    c = np.cos(theta)
    s = np.sin(theta)
    third = (1.0 - c) / 3.0
    sq = np.sqrt(1.0 / 3.0) * s
    m = np.full((3, 3), third)
    m += np.diag([c, c, c])
    m[0, 1] -= sq
    m[1, 2] -= sq
    m[2, 0] -= sq
    m[0, 2] += sq
    m[1, 0] += sq
    m[2, 1] += sq
    return m.astype(np.float64)


def _shape_mask(kind, h, w, cy, cx, ry, rx):
    yy, xx = np.mgrid[0:h, 0:w]
    dy = yy - cy
    dx = xx - cx
    if kind == 2:       # circle (ry is the radius)
        return dy * dy + dx * dx <= ry * ry
    if kind == 3:       # rectangle
        return (np.abs(dy) <= ry) & (np.abs(dx) <= rx)
    if kind == 4:       # upward triangle: apex at cy-ry, base at cy+ry
        return (dy >= -ry) & (dy <= ry) & (np.abs(dx) <= (dy + ry) * 0.5)
    raise ValueError(f"unknown shape kind {kind}")


def generate_scene(spec, h, w, rng):
    """One labeled scene drawn from the domain's distribution."""
    if h % 4 or w % 4:
        raise ValueError(f"scene dims must be divisible by 4, got {h}x{w}")
    label = np.zeros((h, w), dtype=np.uint8)

    band_h = int(rng.integers(h // 8, h // 4 + 1))
    band_y = int(rng.integers(0, h - band_h + 1))
    label[band_y:band_y + band_h, :] = 1
    occupied = label > 0

    freqs = np.asarray(spec.shape_frequencies, dtype=np.float64)
    freqs = freqs / freqs.sum()
    n_shapes = int(rng.integers(2, 7))
    for _ in range(n_shapes):
        u = rng.uniform()
        kind = 2 + int(np.searchsorted(np.cumsum(freqs), u, side="right").clip(0, 2))
        for _attempt in range(40):
            ry = int(rng.integers(5, max(6, min(h, w) // 8)))
            rx = int(rng.integers(5, max(6, min(h, w) // 8))) if kind == 3 else ry
            cy = int(rng.integers(ry, h - ry))
            cx = int(rng.integers(rx, w - rx))
            mask = _shape_mask(kind, h, w, cy, cx, ry, rx)
            if not (mask & occupied).any():
                label[mask] = kind
                occupied |= mask
                break

    image = np.asarray(spec.palette, dtype=np.float64)[label]
    if spec.hue_shift != 0.0:
        image = np.clip(image @ _hue_rotation(spec.hue_shift).T, 0.0, 1.0)
    if spec.gamma != 1.0:
        image = image ** spec.gamma
    if spec.noise_sigma > 0.0:
        image = image + rng.normal(scale=spec.noise_sigma, size=image.shape)
    image = np.clip(image, 0.0, 1.0).astype(np.float32)
    return Scene(image=image, label=label)


def class_priors(scenes, num_classes=NUM_CLASSES):
    """Pixel fraction of every class over a scene list."""
    if not scenes:
        raise ValueError("empty dataset")
    counts = np.zeros(num_classes, dtype=np.int64)
    for s in scenes:
        counts += np.bincount(s.label.ravel(), minlength=num_classes)
    return ClassPriors(d=counts / counts.sum())


# -- netpbm I/O ---------------------------------------------------------------


def _parse_netpbm_header(data, magic, path):
    if data[:2] != magic:
        raise NetpbmError(f"{path}: not a {magic.decode()} file (bad magic bytes)")
    pos = 2
    fields = []
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise NetpbmError(f"{path}: truncated header at byte {pos}")
        try:
            fields.append(int(data[start:pos]))
        except ValueError:
            raise NetpbmError(f"{path}: non-numeric header field at byte {start}") from None
    if pos >= len(data):
        raise NetpbmError(f"{path}: header ends without payload")
    pos += 1  # single whitespace byte separating header and payload
    w, h, maxval = fields
    if maxval != 255:
        raise NetpbmError(f"{path}: expected maxval 255, got {maxval}")
    return w, h, pos


def write_ppm(path, image):
    img = np.asarray(image)
    h, w = img.shape[:2]
    payload = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(payload.tobytes())


def read_ppm(path):
    with open(path, "rb") as f:
        data = f.read()
    w, h, pos = _parse_netpbm_header(data, b"P6", path)
    expected = w * h * 3
    if len(data) - pos < expected:
        raise NetpbmError(f"{path}: payload truncated at byte {len(data)} "
                          f"(expected {pos + expected} bytes)")
    raw = np.frombuffer(data, dtype=np.uint8, count=expected, offset=pos)
    return (raw.reshape(h, w, 3).astype(np.float32) / 255.0)


def write_pgm(path, label):
    lab = np.asarray(label, dtype=np.uint8)
    h, w = lab.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(lab.tobytes())


def read_pgm(path, num_classes=None):
    with open(path, "rb") as f:
        data = f.read()
    w, h, pos = _parse_netpbm_header(data, b"P5", path)
    expected = w * h
    if len(data) - pos < expected:
        raise NetpbmError(f"{path}: payload truncated at byte {len(data)} "
                          f"(expected {pos + expected} bytes)")
    raw = np.frombuffer(data, dtype=np.uint8, count=expected, offset=pos)
    if num_classes is not None and raw.max(initial=0) >= num_classes:
        bad = int(np.argmax(raw >= num_classes))
        raise NetpbmError(f"{path}: label value {raw[bad]} at byte offset {pos + bad} "
                          f"exceeds class count {num_classes}")
    return raw.reshape(h, w).copy()


# -- dataset layout -----------------------------------------------------------


def save_scene(domain_dir, index, scene):
    write_ppm(os.path.join(domain_dir, "img", f"{index:05d}.ppm"), scene.image)
    write_pgm(os.path.join(domain_dir, "lab", f"{index:05d}.pgm"), scene.label)


def load_scene(domain_dir, index, num_classes=NUM_CLASSES):
    image = read_ppm(os.path.join(domain_dir, "img", f"{index:05d}.ppm"))
    label = read_pgm(os.path.join(domain_dir, "lab", f"{index:05d}.pgm"), num_classes)
    return Scene(image=image, label=label)


def write_domain(root, dirname, scenes, spec, seed, h, w):
    """Write a scene list plus its manifest under root/dirname."""
    domain_dir = os.path.join(root, dirname)
    os.makedirs(os.path.join(domain_dir, "img"), exist_ok=True)
    os.makedirs(os.path.join(domain_dir, "lab"), exist_ok=True)
    for i, scene in enumerate(scenes):
        save_scene(domain_dir, i, scene)
    pal = " ".join(f"{v:.4f}" for v in np.asarray(spec.palette).ravel())
    freqs = " ".join(f"{v:.4f}" for v in spec.shape_frequencies)
    manifest = [
        f"domain = {spec.name}",
        f"count = {len(scenes)}",
        f"height = {h}",
        f"width = {w}",
        f"seed = {seed}",
        f"classes = {' '.join(CLASS_NAMES)}",
        f"palette = {pal}",
        f"hue_shift = {spec.hue_shift}",
        f"gamma = {spec.gamma}",
        f"noise_sigma = {spec.noise_sigma}",
        f"shape_frequencies = {freqs}",
    ]
    with open(os.path.join(domain_dir, "manifest.txt"), "w") as f:
        f.write("\n".join(manifest) + "\n")
    return domain_dir


def load_domain(domain_dir, num_classes=NUM_CLASSES):
    img_dir = os.path.join(domain_dir, "img")
    if not os.path.isdir(img_dir):
        raise FileNotFoundError(f"no image directory at {img_dir}")
    scenes = []
    for fname in sorted(os.listdir(img_dir)):
        if not fname.endswith(".ppm"):
            continue
        index = int(fname[:-4])
        scenes.append(load_scene(domain_dir, index, num_classes))
    if not scenes:
        raise FileNotFoundError(f"no scenes found under {domain_dir}")
    return scenes


def make_dataset(root, seed, train_count, val_count, h, w):
    """Generate and write the standard four splits; returns their paths."""
    splits = {}
    for spec_fn, domain in ((synth_a, "synthA"), (real_b, "realB")):
        spec = spec_fn()
        for split, count in (("train", train_count), ("val", val_count)):
            dirname = f"{domain}_{split}"
            base = RngStream(f"scene.{dirname}", seed)
            scenes = [generate_scene(spec, h, w, base.spawn(i)) for i in range(count)]
            splits[dirname] = write_domain(root, dirname, scenes, spec, seed, h, w)
    return splits
