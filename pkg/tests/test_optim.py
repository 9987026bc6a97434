import numpy as np
import pytest

from styleadapt import Adam, ParamSet, SGD, Tensor, make_optimizer


def _single_param(value, grad=None):
    ps = ParamSet()
    t = Tensor(np.array([value], dtype=np.float32), requires_grad=True)
    if grad is not None:
        t.grad = np.array([grad], dtype=np.float32)
    ps.add("w", t)
    return ps, t


def test_zero_grads_fixed_point():
    ps, t = _single_param(1.25, grad=0.0)
    Adam(ps, lr=0.1, weight_decay=0.0).step()
    np.testing.assert_array_equal(t.data, [1.25])
    ps2, t2 = _single_param(1.25, grad=0.0)
    SGD(ps2, lr=0.1, momentum=0.9, weight_decay=0.0).step()
    np.testing.assert_array_equal(t2.data, [1.25])


def test_sgd_definition():
    ps, t = _single_param(0.0, grad=1.0)
    SGD(ps, lr=0.1, momentum=0.0).step()
    np.testing.assert_allclose(t.data, [-0.1], rtol=1e-6)


def test_sgd_momentum_accumulates():
    ps, t = _single_param(0.0, grad=1.0)
    opt = SGD(ps, lr=0.1, momentum=0.5)
    opt.step()
    t.grad = np.array([1.0], dtype=np.float32)
    opt.step()  # velocity 1.5 on the second step
    np.testing.assert_allclose(t.data, [-0.1 - 0.15], rtol=1e-6)


def _scalar_adam_first_step(g, lr, b1=0.9, b2=0.999, eps=1e-8):
    # reference first-step update computed directly from the definition
    m = (1 - b1) * g
    v = (1 - b2) * g * g
    m_hat = m / (1 - b1)
    v_hat = v / (1 - b2)
    return -lr * m_hat / (np.sqrt(v_hat) + eps)


@pytest.mark.parametrize("g", [0.5, -2.0, 3e-3])
def test_adam_first_step_moves_by_lr_sign(g):
    lr = 0.01
    ps, t = _single_param(0.0, grad=g)
    Adam(ps, lr=lr).step()
    np.testing.assert_allclose(t.data, [_scalar_adam_first_step(g, lr)], rtol=1e-6)
    np.testing.assert_allclose(t.data, [-lr * np.sign(g)], atol=1e-6)


def test_missing_grad_raises():
    ps, _ = _single_param(1.0, grad=None)
    with pytest.raises(ValueError, match="no gradient"):
        Adam(ps, lr=0.1).step()


def test_grads_cleared_after_step():
    ps, t = _single_param(1.0, grad=1.0)
    opt = SGD(ps, lr=0.1)
    opt.step()
    assert t.grad is None
    with pytest.raises(ValueError, match="no gradient"):
        opt.step()


def test_weight_decay_pulls_toward_zero():
    ps, t = _single_param(2.0, grad=0.0)
    SGD(ps, lr=0.1, weight_decay=0.5).step()
    np.testing.assert_allclose(t.data, [2.0 - 0.1 * 0.5 * 2.0], rtol=1e-6)


def test_step_counter_increases():
    ps, t = _single_param(0.0, grad=1.0)
    opt = Adam(ps, lr=0.01)
    for expected in (1, 2, 3):
        t.grad = np.array([1.0], dtype=np.float32)
        opt.step()
        assert opt.step_count == expected


def test_make_optimizer_kinds():
    ps, _ = _single_param(0.0)
    assert isinstance(make_optimizer("adam", ps, lr=0.1), Adam)
    assert isinstance(make_optimizer("sgd", ps, lr=0.1), SGD)
    with pytest.raises(ValueError, match="unknown optimizer"):
        make_optimizer("rmsprop", ps, lr=0.1)


def test_paramset_rejects_duplicates():
    ps, _ = _single_param(0.0)
    with pytest.raises(ValueError, match="duplicate"):
        ps.add("w", Tensor(np.zeros(1), requires_grad=True))


def test_paramset_copy_is_deep():
    ps, t = _single_param(1.0)
    clone = ps.copy()
    clone["w"].data[0] = 99.0
    assert t.data[0] == 1.0
