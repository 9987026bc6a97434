import numpy as np

from styleadapt.rng import RngStream, make_streams


def test_same_seed_same_sequence():
    a = RngStream("augment", 7)
    b = RngStream("augment", 7)
    np.testing.assert_array_equal(a.uniform(size=100), b.uniform(size=100))
    assert a.integers(0, 1000) == b.integers(0, 1000)


def test_streams_are_independent():
    draws = {name: RngStream(name, 7).uniform(size=50) for name in
             ("data", "augment", "translate", "init")}
    names = list(draws)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            assert not np.allclose(draws[names[i]], draws[names[j]])


def test_different_seeds_differ():
    a = RngStream("data", 1).uniform(size=50)
    b = RngStream("data", 2).uniform(size=50)
    assert not np.allclose(a, b)


def test_spawn_reproducible_and_distinct():
    base = RngStream("scene", 7)
    c1 = base.spawn(3).uniform(size=20)
    c2 = RngStream("scene", 7).spawn(3).uniform(size=20)
    np.testing.assert_array_equal(c1, c2)
    assert not np.allclose(c1, base.spawn(4).uniform(size=20))


def test_bernoulli_edges():
    s = RngStream("x", 0)
    assert s.bernoulli(0.0) is False
    assert s.bernoulli(1.0) is True


def test_make_streams_bundle():
    streams = make_streams(7)
    assert set(streams) == {"data", "augment", "translate", "init"}
