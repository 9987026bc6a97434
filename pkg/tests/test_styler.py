import numpy as np
import pytest

import styleadapt as sa
from styleadapt import Adam, adain, build_styler, generate, tensor
from styleadapt.ops import channel_moments
from styleadapt.rng import RngStream
from styleadapt.styler import styler_loss, styler_loss_terms


def _img(seed, h=16, w=16):
    rng = np.random.default_rng(seed)
    return rng.uniform(0, 1, size=(h, w, 3)).astype(np.float32)


def _feat(seed, c=4, h=6, w=6, loc=0.0, scale=1.0):
    rng = np.random.default_rng(seed)
    return rng.normal(loc, scale, size=(1, c, h, w))


class TestAdain:
    def test_self_style_identity(self):
        t = tensor(_feat(0, scale=2.0))  # sigma well above sqrt(eps)
        out = adain(t, t, eps=1e-5)
        np.testing.assert_allclose(out.data, t.data, atol=1e-5)

    def test_standardized_content_oracle(self):
        # content standardized to (0, 1) exactly; style built as 2*z + 5 from
        # another standardized draw, so the output must equal 2*t_c + 5
        def standardize(x):
            mu = x.mean(axis=(2, 3), keepdims=True)
            sd = x.std(axis=(2, 3), keepdims=True)
            return (x - mu) / sd

        c = standardize(_feat(1))
        s = 2.0 * standardize(_feat(2)) + 5.0
        out = adain(tensor(c, dtype=np.float64), tensor(s, dtype=np.float64), eps=1e-12)
        np.testing.assert_allclose(out.data, 2.0 * c + 5.0, atol=1e-4)

    def test_moment_matching(self):
        for seed in range(10):
            c = tensor(_feat(seed, scale=1.5))
            s = tensor(_feat(seed + 100, loc=0.7, scale=0.8))
            out = adain(c, s, eps=1e-5)
            mu_o, sig_o = channel_moments(out, 1e-5)
            mu_s, sig_s = channel_moments(s, 1e-5)
            np.testing.assert_allclose(mu_o.data, mu_s.data, atol=1e-4)
            np.testing.assert_allclose(sig_o.data, sig_s.data, atol=1e-4)

    def test_different_spatial_sizes_allowed(self):
        out = adain(tensor(_feat(3, h=8, w=8)), tensor(_feat(4, h=4, w=12)), 1e-5)
        assert out.shape == (1, 4, 8, 8)

    def test_channel_mismatch(self):
        with pytest.raises(ValueError, match="channel"):
            adain(tensor(_feat(5, c=4)), tensor(_feat(6, c=3)), 1e-5)


class TestGenerate:
    @pytest.fixture(scope="class")
    def net(self):
        return build_styler(21)

    def test_alpha_zero_is_reconstruction(self, net):
        c, s = _img(0), _img(1)
        out = generate(c, s, 0.0, net)
        recon = net.decode(net.encode(sa.to_nchw(c))).clip(0.0, 1.0)
        np.testing.assert_array_equal(out, sa.from_nchw(recon))

    def test_alpha_one_is_full_transfer(self, net):
        c, s = _img(2), _img(3)
        out = generate(c, s, 1.0, net)
        t_hat = adain(net.encode(sa.to_nchw(c)), net.encode(sa.to_nchw(s)),
                      net.epsilon)
        full = net.decode(t_hat).clip(0.0, 1.0)
        np.testing.assert_array_equal(out, sa.from_nchw(full))

    def test_output_clipped_and_shaped(self, net):
        for seed in range(5):
            c = _img(seed, h=24, w=16)
            out = generate(c, _img(seed + 50), 0.7, net)
            assert out.shape == c.shape
            assert out.min() >= 0.0 and out.max() <= 1.0

    def test_alpha_bounds_enforced(self, net):
        with pytest.raises(ValueError, match="alpha"):
            generate(_img(0), _img(1), 1.2, net)

    def test_determinism(self, net):
        a = generate(_img(6), _img(7), 0.4, net)
        b = generate(_img(6), _img(7), 0.4, net)
        np.testing.assert_array_equal(a, b)

    def test_alpha_continuity_shrinks(self, net):
        c, s = _img(8), _img(9)
        base = generate(c, s, 0.5, net)
        d_small = np.abs(generate(c, s, 0.5 + 1e-3, net) - base).max()
        d_large = np.abs(generate(c, s, 0.5 + 1e-2, net) - base).max()
        assert d_small <= d_large


class TestStylerLoss:
    def test_style_weight_zero_is_content_only(self):
        net = build_styler(22)
        c, s = _img(10), _img(11)
        content, _ = styler_loss_terms(c, s, net)
        loss = styler_loss(c, s, net, style_weight=0.0)
        # zero weight multiplies the style term away but keeps the graph
        np.testing.assert_allclose(loss.item(), content.item(), rtol=1e-6)

    def test_loss_is_weighted_sum(self):
        net = build_styler(23)
        c, s = _img(12), _img(13)
        content, style = styler_loss_terms(c, s, net)
        loss = styler_loss(c, s, net, style_weight=0.1)
        np.testing.assert_allclose(loss.item(),
                                   content.item() + 0.1 * style.item(), rtol=1e-5)

    def test_finite_positive_on_random_net(self):
        net = build_styler(24)
        loss = styler_loss(_img(14), _img(15), net, style_weight=0.1)
        assert np.isfinite(loss.item()) and loss.item() > 0


class TestTraining:
    def test_zero_steps_is_noop(self):
        net = build_styler(25)
        before = {k: t.data.copy() for k, t in net.all_params().items()}
        net.freeze_encoder()
        opt = Adam(net.decoder, lr=1e-3)
        records = sa.train_styler([_img(0, 32, 32)], net, opt, steps=0, crop=32)
        assert records == []
        for k, t in net.all_params().items():
            np.testing.assert_array_equal(t.data, before[k])

    def test_empty_pool_rejected(self):
        net = build_styler(26)
        with pytest.raises(ValueError, match="empty"):
            sa.train_styler([], net, Adam(net.decoder, lr=1e-3), steps=1)
        with pytest.raises(ValueError, match="empty"):
            sa.pretrain_autoencoder([], net, Adam(net.all_params(), lr=1e-3), steps=1)

    def test_loss_decreases_over_short_run(self):
        pool = [_img(s, 32, 32) for s in range(8)]
        net = build_styler(27)
        opt = Adam(net.all_params(), lr=1e-3)
        recs = sa.pretrain_autoencoder(pool, net, opt, 120, crop=32,
                                       rng=RngStream("t", 1))
        first = np.mean([r["loss"] for r in recs[:20]])
        last = np.mean([r["loss"] for r in recs[-20:]])
        assert last < first
