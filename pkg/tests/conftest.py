import numpy as np
import pytest

import styleadapt as sa
from styleadapt.rng import RngStream


@pytest.fixture(scope="session")
def small_scenes():
    """20 source + 20 target + 6 target-val scenes at 64x64 (fast fixtures)."""
    rng = RngStream("fixtures", 11)
    spec_a, spec_b = sa.synth_a(), sa.real_b()
    src = [sa.generate_scene(spec_a, 64, 64, rng.spawn(i)) for i in range(20)]
    tgt = [sa.generate_scene(spec_b, 64, 64, rng.spawn(100 + i)) for i in range(20)]
    val = [sa.generate_scene(spec_b, 64, 64, rng.spawn(200 + i)) for i in range(6)]
    return src, tgt, val


@pytest.fixture(scope="session")
def tiny_styler(small_scenes):
    """Briefly trained style network shared across trainer tests."""
    src, tgt, _ = small_scenes
    pool = [s.image for s in src] + [t.image for t in tgt]
    net = sa.build_styler(3)
    opt = sa.Adam(net.all_params(), lr=1e-3)
    sa.pretrain_autoencoder(pool, net, opt, 60, crop=32,
                            rng=RngStream("tiny.pre", 3))
    net.freeze_encoder()
    opt2 = sa.Adam(net.decoder, lr=1e-3)
    sa.train_styler(pool, net, opt2, 40, crop=32,
                    rng=RngStream("tiny.style", 3))
    net.freeze()
    return net


def make_state(styler, priors=None, seed=5, **hp_kwargs):
    hp = sa.HyperParams(**hp_kwargs)
    priors = priors or sa.ClassPriors(d=np.array([0.6, 0.2, 0.1, 0.07, 0.03]))
    return sa.make_trainer_state(5, styler, priors, hp, seed=seed, crop=64)
