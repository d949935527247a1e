import numpy as np
import pytest

from nrs import ArchSpec, build_network
from nrs.analysis.gradcheck import (ZERO_ATOL, BlockResult, GradCheckReport,
                                    grad_check, numeric_grad, relative_error)
from nrs.layers import Dense
from nrs.plan import philox


def test_linear_layer_quadratic_loss():
    fc = Dense(4, 3, rng=philox(0, 1))
    rng = np.random.default_rng(1)
    x, t = rng.standard_normal((5, 4)), rng.standard_normal((5, 3))

    def loss():
        d = fc.forward(x) - t
        return float(np.sum(d * d))

    fc.zero_grad()
    fc.backward(2.0 * (fc.forward(x) - t))
    for name, p in fc.params.items():
        num = numeric_grad(loss, p)
        assert relative_error(fc.grads[name], num).max() < 1e-9, name


def test_relative_error_floor():
    assert relative_error(np.array([0.0]), np.array([0.0]))[0] == 0.0
    assert relative_error(np.array([1.0]), np.array([2.0]))[0] == 0.5


def test_failures_are_named():
    rep = GradCheckReport([BlockResult("a.w", 1e-3, 1e-3, 1e-5),
                           BlockResult("b.w", 1e-9, 1e-9, 1e-5)])
    assert not rep.ok and rep.failures() == ["a.w"]
    assert "FAIL: a.w" in rep.render()


def test_zero_block_judged_absolutely():
    ok = BlockResult("fc1.bias", 1.0, ZERO_ATOL / 10, 1e-5, structural_zero=True)
    bad = BlockResult("fc1.bias", 1.0, ZERO_ATOL * 10, 1e-5, structural_zero=True)
    assert ok.ok and not bad.ok


def test_bias_before_batchnorm_is_a_zero_block():
    net = build_network(ArchSpec(d=6, n_outputs=3, task="classification",
                                 n_mul=1, n_h=3, seed=0))
    X = np.random.default_rng(0).standard_normal((16, 6))
    y = np.arange(16) % 3
    train = {b.name: b for b in grad_check(net, X, y).blocks}
    assert train["fc1.bias"].structural_zero and train["fc1.bias"].ok
    assert not any(b.structural_zero for n, b in train.items()
                   if n != "fc1.bias")
    # with running statistics the bias matters and is checked relatively
    infer = {b.name: b for b in grad_check(net, X, y, training=False).blocks}
    assert not infer["fc1.bias"].structural_zero and infer["fc1.bias"].ok


def test_grad_check_restores_running_stats():
    net = build_network(ArchSpec(d=4, n_outputs=2, task="classification",
                                 n_mul=1, n_h=2, seed=0))
    before = {k: v.copy() for k, v in net.buffers().items()}
    grad_check(net, np.random.default_rng(0).standard_normal((6, 4)),
               np.arange(6) % 2)
    after = net.buffers()
    assert all(np.array_equal(before[k], after[k]) for k in before)
