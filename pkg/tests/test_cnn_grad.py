"""Finite-difference checks of every layer's backward pass.

Scheme: pick a fixed random projection c, define the scalar loss
L(theta) = sum(c * forward(x)), and compare the analytic gradient from
backward(c) against central differences of L.
"""

import numpy as np
import pytest

from edgesight.cnn.layers import (BatchNormLayer, ConvLayer,
                                  DepthwiseConvLayer, PointwiseConvLayer,
                                  ReLULayer)
from edgesight.cnn.train import mse_softmax_loss, smooth_l1_loss

from oracles import numeric_gradient, rel_error

TOL = 1e-3
H = 1e-4


def check_layer_gradients(layer, x, train=False, params=("w",)):
    """Assert analytic grads for inputs and every named param beat TOL."""
    rng = np.random.default_rng(99)
    out = layer.forward(x, train=train)
    c = rng.normal(size=out.shape)

    layer.zero_grads()
    layer.forward(x, train=train)
    dx = layer.backward(c)

    def loss_wrt_input(xv):
        return float(np.sum(c * layer.forward(xv, train=train)))

    num_dx = numeric_gradient(loss_wrt_input, x.copy(), h=H)
    err = rel_error(dx, num_dx)
    assert err < TOL, f"input grad rel error {err}"

    for name in params:
        p = layer.params[name]

        def loss_wrt_param(pv):
            old = layer.params[name]
            layer.params[name] = pv
            val = float(np.sum(c * layer.forward(x, train=train)))
            layer.params[name] = old
            return val

        num_dp = numeric_gradient(loss_wrt_param, p.copy(), h=H)
        err = rel_error(layer.grads[name], num_dp)
        assert err < TOL, f"{name} grad rel error {err}"


def test_conv_layer_gradients(rng):
    layer = ConvLayer(3, 4, 3, stride=2, padding=1, bias=True,
                      rng=rng, dtype=np.float64)
    x = rng.normal(size=(3, 7, 7))
    check_layer_gradients(layer, x, params=("w", "b"))


def test_conv_layer_gradients_no_pad(rng):
    layer = ConvLayer(2, 3, 3, stride=1, padding=0, rng=rng, dtype=np.float64)
    x = rng.normal(size=(2, 6, 6))
    check_layer_gradients(layer, x)


def test_depthwise_layer_gradients(rng):
    layer = DepthwiseConvLayer(4, 3, stride=2, padding=1, rng=rng,
                               dtype=np.float64)
    x = rng.normal(size=(4, 7, 7))
    check_layer_gradients(layer, x)


def test_pointwise_layer_gradients(rng):
    layer = PointwiseConvLayer(5, 3, rng=rng, dtype=np.float64)
    x = rng.normal(size=(5, 4, 4))
    check_layer_gradients(layer, x)


def test_batchnorm_eval_mode_gradients(rng):
    layer = BatchNormLayer(3, dtype=np.float64)
    layer.running_mean = rng.normal(size=3)
    layer.running_var = rng.uniform(0.5, 2.0, size=3)
    layer.params["gamma"] = rng.normal(size=3)
    layer.params["beta"] = rng.normal(size=3)
    x = rng.normal(size=(3, 5, 5))
    check_layer_gradients(layer, x, train=False, params=("gamma", "beta"))


def test_batchnorm_train_mode_gradients(rng):
    # train mode recomputes statistics from x, so finite differences see
    # the full dependency including mean/var
    layer = BatchNormLayer(3, dtype=np.float64)
    layer.params["gamma"] = rng.uniform(0.5, 1.5, size=3)
    layer.params["beta"] = rng.normal(size=3)
    x = rng.normal(size=(3, 5, 5))
    check_layer_gradients(layer, x, train=True, params=("gamma", "beta"))


def test_relu_gradients_away_from_zero(rng):
    layer = ReLULayer()
    x = rng.normal(size=(2, 5, 5))
    x[np.abs(x) < 0.05] = 0.1  # keep clear of the kink
    check_layer_gradients(layer, x, params=())


def test_mse_softmax_head_gradients(rng):
    logits = rng.normal(size=(6, 2))
    targets = np.zeros((6, 2))
    targets[np.arange(6), rng.integers(0, 2, size=6)] = 1.0
    _, dlogits = mse_softmax_loss(logits, targets)

    def loss(lv):
        return mse_softmax_loss(lv, targets)[0]

    num = numeric_gradient(loss, logits.copy(), h=H)
    assert rel_error(dlogits, num) < TOL


def test_mse_softmax_perfect_predictions_zero_loss():
    logits = np.array([[20.0, -20.0], [-20.0, 20.0]])
    targets = np.array([[1.0, 0.0], [0.0, 1.0]])
    loss, _ = mse_softmax_loss(logits, targets)
    assert loss == pytest.approx(0.0, abs=1e-12)


def test_smooth_l1_gradients(rng):
    pred = rng.normal(scale=2.0, size=(7, 4))
    target = rng.normal(scale=2.0, size=(7, 4))
    # keep away from the |u| = 1 kink for clean finite differences
    u = pred - target
    pred[np.abs(np.abs(u) - 1.0) < 0.05] += 0.2
    _, dpred = smooth_l1_loss(pred, target)

    def loss(pv):
        return smooth_l1_loss(pv, target)[0]

    num = numeric_gradient(loss, pred.copy(), h=H)
    assert rel_error(dpred, num) < TOL


def test_smooth_l1_values():
    loss, _ = smooth_l1_loss(np.array([0.5, 3.0]), np.array([0.0, 0.0]))
    assert loss == pytest.approx((0.5 * 0.25 + 2.5) / 2)
