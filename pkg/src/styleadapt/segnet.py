"""Fully-convolutional segmentation network with one skip refinement.

Trunk: 3 -> 16 -> 32 -> 64 channels with two 2x max-pools. A 1x1 head scores
classes at 1/4 resolution; a second 1x1 head taps the 1/2-resolution stage
and is fused in after nearest upsampling, so coarse semantics get refined by
higher-resolution evidence before the final upsample back to full size.
"""

from . import ops
from .images import to_nchw
from .layers import add_conv, conv
from .optim import ParamSet
from .rng import RngStream
from .tensor import Tensor


class SegNet:
    """Student/teacher segmentation model; same class plays both roles."""

    def __init__(self, params, num_classes):
        self.params = params
        self.num_classes = num_classes

    def logits(self, x):
        if x.shape[2] % 4 or x.shape[3] % 4:
            raise ValueError(f"input spatial dims must be divisible by 4, got {x.shape}")
        s1 = conv(self.params, "c1", x).relu()
        h2 = ops.maxpool2(s1)
        s2 = conv(self.params, "c2", h2).relu()
        h4 = ops.maxpool2(s2)
        s3 = conv(self.params, "c3", h4).relu()
        coarse = conv(self.params, "head", s3)          # C classes at 1/4
        skip = conv(self.params, "skip", s2)            # C classes at 1/2
        fused = ops.upsample_nearest2(coarse) + skip
        return ops.upsample_nearest2(fused)

    def forward(self, x):
        """Per-pixel class distribution for an NCHW batch or HWC image."""
        if not isinstance(x, Tensor):
            x = to_nchw(x)
        return ops.softmax_channels(self.logits(x))

    def copy(self, requires_grad=None):
        return SegNet(self.params.copy(requires_grad=requires_grad), self.num_classes)


def build_segnet(num_classes, seed):
    """Fresh network with He fan-in init (bias zero) from the given seed."""
    if num_classes < 2:
        raise ValueError(f"need at least 2 classes, got {num_classes}")
    rng = RngStream("init.segnet", seed)
    p = ParamSet()
    add_conv(p, "c1", 3, 16, 3, rng)
    add_conv(p, "c2", 16, 32, 3, rng)
    add_conv(p, "c3", 32, 64, 3, rng)
    add_conv(p, "head", 64, num_classes, 1, rng)
    add_conv(p, "skip", 32, num_classes, 1, rng)
    return SegNet(p, num_classes)


def seg_forward(net, x):
    """Probability map of the batch; alias for net.forward."""
    return net.forward(x)
