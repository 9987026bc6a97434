import numpy as np
import pytest

from styleadapt import from_nchw, psnr, to_nchw


def test_roundtrip():
    rng = np.random.default_rng(0)
    img = rng.uniform(0, 1, size=(8, 12, 3)).astype(np.float32)
    t = to_nchw(img)
    assert t.shape == (1, 3, 8, 12)
    np.testing.assert_array_equal(from_nchw(t), img)


def test_psnr_known_value():
    a = np.zeros((4, 4, 3))
    b = np.full((4, 4, 3), 0.1)
    # mse = 0.01 -> 10*log10(1/0.01) = 20 dB
    assert abs(psnr(a, b) - 20.0) < 1e-9


def test_psnr_identical_is_infinite():
    a = np.full((2, 2, 3), 0.5)
    assert psnr(a, a) == float("inf")


def test_psnr_shape_mismatch():
    with pytest.raises(ValueError, match="equal shapes"):
        psnr(np.zeros((2, 2, 3)), np.zeros((3, 2, 3)))
