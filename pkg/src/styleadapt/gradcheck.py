"""Finite-difference verification of the autodiff engine.

The checker replays a closure at float64, sums the output to a scalar, and
compares analytic gradients against central differences with step 1e-4 on
inputs drawn in [-1, 1]. Non-differentiable knots (relu at 0, clip at its
bounds, ties inside a pooling window) are excluded by construction: the case
generators keep every sample a safe margin away from those points, since no
finite-difference estimate is meaningful on them.
"""

import zlib
from dataclasses import dataclass, field

import numpy as np

from . import ops
from .tensor import Tensor

FD_STEP = 1e-4
KNOT_MARGIN = 1e-2  # distance kept between samples and non-differentiable points


@dataclass
class GradCheckReport:
    name: str
    tolerance: float
    max_rel_errors: list = field(default_factory=list)  # one entry per input

    @property
    def worst(self):
        return max(self.max_rel_errors) if self.max_rel_errors else 0.0

    @property
    def passed(self):
        return self.worst <= self.tolerance

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        errs = " ".join(f"{e:.3e}" for e in self.max_rel_errors)
        return f"{status}  {self.name}: max rel err per input [{errs}] (tol {self.tolerance:g})"


def _scalar_eval(builder, arrays):
    out = builder([Tensor(a) for a in arrays])
    return float(out.data.sum())


def grad_check(builder, arrays, tolerance=1e-5, step=FD_STEP, name="op"):
    """Compare analytic and numeric gradients of ``builder`` on ``arrays``.

    builder maps a list of Tensors to one Tensor; non-scalar outputs are
    summed. Relative error uses max(|analytic|, |numeric|, 1) as denominator,
    so near-zero gradients are judged on absolute error.
    """
    arrays = [np.ascontiguousarray(a, dtype=np.float64) for a in arrays]
    inputs = [Tensor(a.copy(), requires_grad=True) for a in arrays]
    out = builder(inputs)
    out.sum().backward()
    analytic = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in inputs]

    report = GradCheckReport(name=name, tolerance=tolerance)
    for i, a in enumerate(arrays):
        numeric = np.zeros_like(a)
        flat = a.reshape(-1)
        num_flat = numeric.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            up = _scalar_eval(builder, arrays)
            flat[j] = orig - step
            down = _scalar_eval(builder, arrays)
            flat[j] = orig
            num_flat[j] = (up - down) / (2 * step)
        denom = np.maximum(np.maximum(np.abs(analytic[i]), np.abs(numeric)), 1.0)
        report.max_rel_errors.append(float(np.max(np.abs(analytic[i] - numeric) / denom)))
    return report


# -- the registered-op suite -------------------------------------------------


def _away_from(x, points, margin=KNOT_MARGIN):
    """Push every sample at least ``margin`` away from each knot point."""
    for p in points:
        close = np.abs(x - p) < margin
        x = np.where(close, p + np.sign(x - p + 1e-12) * margin, x)
    return x


def _rand(rng, *shape):
    return rng.uniform(-1.0, 1.0, size=shape)


def _pool_safe(rng, n, c, h, w):
    """Input whose 2x2 windows have a unique max with a clear gap."""
    x = _rand(rng, n, c, h, w)
    windows = x.reshape(n, c, h // 2, 2, w // 2, 2).transpose(0, 1, 2, 4, 3, 5)
    flat = windows.reshape(-1, 4)
    ranks = np.argsort(np.argsort(flat, axis=1), axis=1)
    flat += ranks * 4 * KNOT_MARGIN  # spreads in-window values apart
    return flat.reshape(n, c, h // 2, w // 2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h, w)


def _suite_cases():
    eps = 1e-5
    return [
        ("add", lambda t: t[0] + t[1], lambda r: [_rand(r, 3, 4), _rand(r, 3, 4)]),
        ("add_broadcast", lambda t: t[0] + t[1], lambda r: [_rand(r, 2, 3, 1, 1), _rand(r, 2, 3, 4, 5)]),
        ("sub", lambda t: t[0] - t[1], lambda r: [_rand(r, 5), _rand(r, 5)]),
        ("mul", lambda t: t[0] * t[1], lambda r: [_rand(r, 2, 6), _rand(r, 2, 6)]),
        ("div", lambda t: t[0] / t[1], lambda r: [_rand(r, 4), _away_from(_rand(r, 4), [0.0], 0.2)]),
        ("scale", lambda t: t[0] * 3.5, lambda r: [_rand(r, 7)]),
        ("relu", lambda t: t[0].relu(), lambda r: [_away_from(_rand(r, 4, 4), [0.0])]),
        ("clip_interior", lambda t: t[0].clip(-0.5, 0.5), lambda r: [_away_from(_rand(r, 10), [-0.5, 0.5])]),
        ("log", lambda t: t[0].log(), lambda r: [r.uniform(0.2, 2.0, size=(6,))]),
        ("exp", lambda t: t[0].exp(), lambda r: [_rand(r, 6)]),
        ("pow_scalar", lambda t: t[0] ** 3.0, lambda r: [_rand(r, 6)]),
        ("sqrt", lambda t: t[0].sqrt(), lambda r: [r.uniform(0.2, 2.0, size=(6,))]),
        ("sum_axis", lambda t: t[0].sum(axis=1) * t[0].sum(axis=1), lambda r: [_rand(r, 3, 4)]),
        ("mean", lambda t: t[0].mean(axis=(2, 3)).exp(), lambda r: [_rand(r, 2, 3, 2, 2)]),
        ("reshape", lambda t: (t[0].reshape(6) * t[0].reshape(6)).sum(), lambda r: [_rand(r, 2, 3)]),
        ("conv2d", lambda t: ops.conv2d(t[0], t[1], t[2], stride=1, padding=1),
         lambda r: [_rand(r, 1, 2, 4, 4), _rand(r, 3, 2, 3, 3), _rand(r, 3)]),
        ("conv2d_stride2", lambda t: ops.conv2d(t[0], t[1], t[2], stride=2, padding=0),
         lambda r: [_rand(r, 2, 2, 5, 5), _rand(r, 2, 2, 3, 3), _rand(r, 2)]),
        ("maxpool2", lambda t: ops.maxpool2(t[0]), lambda r: [_pool_safe(r, 1, 2, 4, 4)]),
        ("upsample_nearest2", lambda t: (ops.upsample_nearest2(t[0]) ** 2.0),
         lambda r: [_rand(r, 1, 2, 3, 3)]),
        ("softmax_channels", lambda t: ops.softmax_channels(t[0]) ** 2.0,
         lambda r: [_rand(r, 1, 4, 2, 2)]),
        ("channel_moments_mu", lambda t: ops.channel_moments(t[0], eps)[0] ** 2.0,
         lambda r: [_rand(r, 1, 3, 3, 3)]),
        ("channel_moments_sigma", lambda t: ops.channel_moments(t[0], eps)[1] ** 2.0,
         lambda r: [_rand(r, 1, 3, 3, 3)]),
        ("fanout", lambda t: t[0] * t[0] + t[0].exp() * t[0], lambda r: [_rand(r, 5)]),
    ]


def run_suite(seeds=range(20), tolerance=1e-5):
    """Run every registered op across the given seeds; returns the reports."""
    reports = []
    for name, builder, make_inputs in _suite_cases():
        worst = GradCheckReport(name=name, tolerance=tolerance)
        for seed in seeds:
            rng = np.random.default_rng((seed, zlib.crc32(name.encode("utf-8"))))
            rep = grad_check(builder, make_inputs(rng), tolerance=tolerance, name=name)
            if not worst.max_rel_errors:
                worst.max_rel_errors = list(rep.max_rel_errors)
            else:
                worst.max_rel_errors = [max(a, b) for a, b in zip(worst.max_rel_errors, rep.max_rel_errors)]
        reports.append(worst)
    return reports
