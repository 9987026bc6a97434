"""Fixed little-endian binary checkpoint format.

Layout: magic "BSD1", version u32, array count u32, then per array a u16
name length, the UTF-8 name, a u8 rank, u32 dims, and the row-major float32
payload. Everything little-endian; a saved file loads back bitwise.
"""

import os
import struct

import numpy as np

from .optim import ParamSet
from .segnet import build_segnet
from .styler import build_styler
from .tensor import Tensor

MAGIC = b"BSD1"
VERSION = 1


class CheckpointError(ValueError):
    """Structurally invalid checkpoint content."""


def _arrays_of(params):
    if isinstance(params, ParamSet):
        return {name: t.data for name, t in params.items()}
    out = {}
    for name, value in params.items():
        out[name] = value.data if isinstance(value, Tensor) else np.asarray(value)
    return out


def save_checkpoint(path, params):
    """Atomically write a ParamSet (or name -> array mapping) to ``path``."""
    arrays = _arrays_of(params)
    chunks = [MAGIC, struct.pack("<I", VERSION), struct.pack("<I", len(arrays))]
    for name, arr in arrays.items():
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(b"".join(chunks))
    os.replace(tmp, path)


def load_checkpoint(path):
    """Read a checkpoint back into a name -> float32 array dict."""
    with open(path, "rb") as f:
        data = f.read()
    if data[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic bytes)")

    pos = 4

    def take(n, what):
        nonlocal pos
        if pos + n > len(data):
            raise CheckpointError(f"{path}: truncated while reading {what} "
                                  f"at byte offset {pos}")
        chunk = data[pos:pos + n]
        pos += n
        return chunk

    version = struct.unpack("<I", take(4, "version"))[0]
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    count = struct.unpack("<I", take(4, "array count"))[0]
    arrays = {}
    for _ in range(count):
        name_len = struct.unpack("<H", take(2, "name length"))[0]
        name = take(name_len, "name").decode("utf-8")
        if name in arrays:
            raise CheckpointError(f"{path}: duplicate array name {name!r}")
        rank = struct.unpack("<B", take(1, "rank"))[0]
        dims = struct.unpack(f"<{rank}I", take(4 * rank, f"dims of {name!r}"))
        n = int(np.prod(dims)) if rank else 1
        payload = take(4 * n, f"payload of {name!r}")
        arrays[name] = np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
    if pos != len(data):
        raise CheckpointError(f"{path}: {len(data) - pos} trailing bytes "
                              f"after byte offset {pos}")
    return arrays


def load_into(params, arrays, path="checkpoint"):
    """Copy loaded arrays into an existing ParamSet, shape-checked."""
    names = params.names()
    if sorted(names) != sorted(arrays):
        missing = sorted(set(names) - set(arrays))
        extra = sorted(set(arrays) - set(names))
        raise CheckpointError(f"{path}: array names do not match architecture "
                              f"(missing {missing}, unexpected {extra})")
    for name in names:
        t = params[name]
        arr = arrays[name]
        if tuple(arr.shape) != tuple(t.shape):
            raise CheckpointError(f"{path}: array {name!r} has dims {tuple(arr.shape)}, "
                                  f"architecture expects {tuple(t.shape)}")
    for name in names:
        params[name].data[...] = arrays[name]


# -- network-level helpers ----------------------------------------------------


def save_styler(path, net):
    merged = {f"encoder.{k}": t for k, t in net.encoder.items()}
    merged.update({f"decoder.{k}": t for k, t in net.decoder.items()})
    save_checkpoint(path, merged)


def load_styler(path, epsilon=None):
    arrays = load_checkpoint(path)
    net = build_styler(seed=0) if epsilon is None else build_styler(seed=0, epsilon=epsilon)
    enc = {k[len("encoder."):]: v for k, v in arrays.items() if k.startswith("encoder.")}
    dec = {k[len("decoder."):]: v for k, v in arrays.items() if k.startswith("decoder.")}
    if len(enc) + len(dec) != len(arrays):
        bad = [k for k in arrays if not k.startswith(("encoder.", "decoder."))]
        raise CheckpointError(f"{path}: unexpected array names {bad}")
    load_into(net.encoder, enc, path)
    load_into(net.decoder, dec, path)
    return net


def save_segnet(path, net):
    save_checkpoint(path, net.params)


def load_segnet(path):
    arrays = load_checkpoint(path)
    if "head.b" not in arrays:
        raise CheckpointError(f"{path}: missing class head; not a segmentation checkpoint")
    num_classes = int(arrays["head.b"].shape[0])
    net = build_segnet(num_classes, seed=0)
    load_into(net.params, arrays, path)
    return net
