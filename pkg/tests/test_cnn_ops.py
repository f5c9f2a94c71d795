import numpy as np
import pytest

from edgesight.cnn.ops import (ConvKernel, batchnorm, compose_separable,
                               conv2d, depthwise_conv,
                               factorization_deviation, out_spatial,
                               pointwise_conv, relu, softmax)
from edgesight.cnn.reference import (conv2d_reference, depthwise_reference,
                                     pointwise_reference)
from edgesight.errors import ConfigError, ShapeError

from oracles import (batchnorm_oracle, conv2d_oracle, depthwise_oracle,
                     max_rel_deviation, pointwise_oracle)


def random_conv_case(rng, dk=None):
    m = int(rng.integers(1, 9))
    n = int(rng.integers(1, 9))
    k = dk if dk is not None else int(rng.choice([1, 3, 5]))
    stride = int(rng.choice([1, 2]))
    pad = int(rng.choice([0, 1]))
    size = int(rng.integers(k + 1, 14))
    x = rng.normal(size=(m, size, size))
    w = rng.normal(size=(n, m, k, k))
    return x, ConvKernel("conventional", w, stride, pad)


def test_conv_scalar_identity():
    x = np.array([[[3.0]]])
    k = ConvKernel("conventional", np.array([[[[2.0]]]]))
    assert conv2d(x, k)[0, 0, 0] == 6.0


def test_conv_delta_kernel_is_identity(rng):
    x = rng.normal(size=(1, 6, 6))
    w = np.zeros((1, 1, 3, 3))
    w[0, 0, 1, 1] = 1.0
    k = ConvKernel("conventional", w, stride=1, padding=1)
    assert np.allclose(conv2d(x, k), x)


def test_conv_matches_oracle(rng):
    for _ in range(8):
        x, k = random_conv_case(rng)
        got = conv2d(x, k)
        expect = conv2d_oracle(x, k.weights, k.stride, k.padding)
        assert max_rel_deviation(got, expect) < 1e-12


def test_conv_channel_mismatch():
    k = ConvKernel("conventional", np.zeros((2, 3, 3, 3)))
    with pytest.raises(ShapeError):
        conv2d(np.zeros((4, 8, 8)), k)
    with pytest.raises(ConfigError):
        conv2d(np.zeros((3, 8, 8)),
               ConvKernel("depthwise", np.zeros((3, 3, 3))))


def test_depthwise_identity_cases(rng):
    x = rng.normal(size=(4, 5, 5))
    ones = ConvKernel("depthwise", np.ones((4, 1, 1)))
    assert np.allclose(depthwise_conv(x, ones), x)
    delta = np.zeros((4, 3, 3))
    delta[:, 1, 1] = 1.0
    k = ConvKernel("depthwise", delta, stride=1, padding=1)
    assert np.allclose(depthwise_conv(x, k), x)


def test_depthwise_matches_oracle(rng):
    for _ in range(8):
        m = int(rng.integers(1, 9))
        k = int(rng.choice([1, 3, 5]))
        stride = int(rng.choice([1, 2]))
        pad = int(rng.choice([0, 1]))
        size = int(rng.integers(k + 1, 14))
        x = rng.normal(size=(m, size, size))
        kern = ConvKernel("depthwise", rng.normal(size=(m, k, k)), stride, pad)
        expect = depthwise_oracle(x, kern.weights, stride, pad)
        assert max_rel_deviation(depthwise_conv(x, kern), expect) < 1e-12


def test_pointwise_identity_and_sum(rng):
    x = rng.normal(size=(3, 4, 4))
    eye = ConvKernel("pointwise", np.eye(3)[:, :, None, None])
    assert np.allclose(pointwise_conv(x, eye), x)
    ones = ConvKernel("pointwise", np.ones((1, 3, 1, 1)))
    assert np.allclose(pointwise_conv(x, ones)[0], x.sum(axis=0))


def test_pointwise_matches_oracle(rng):
    for _ in range(8):
        m = int(rng.integers(1, 9))
        n = int(rng.integers(1, 9))
        size = int(rng.integers(2, 14))
        x = rng.normal(size=(m, size, size))
        kern = ConvKernel("pointwise", rng.normal(size=(n, m, 1, 1)))
        expect = pointwise_oracle(x, kern.weights[:, :, 0, 0])
        assert max_rel_deviation(pointwise_conv(x, kern), expect) < 1e-12


def test_reference_paths_agree_with_fast_paths(rng):
    x, k = random_conv_case(rng)
    ref, _ = conv2d_reference(x, k)
    assert max_rel_deviation(conv2d(x, k), ref) < 1e-12


def test_factorization_zero_and_trivial(rng):
    x = rng.normal(size=(3, 6, 6))
    zero_d = ConvKernel("depthwise", np.zeros((3, 3, 3)), 1, 1)
    pw = ConvKernel("pointwise", rng.normal(size=(5, 3, 1, 1)))
    assert factorization_deviation(zero_d, pw, x) == 0.0
    ones_d = ConvKernel("depthwise", np.ones((3, 1, 1)))
    # 1x1 depthwise of ones: both paths reduce to the pointwise map alone
    composed = compose_separable(ones_d, pw)
    assert np.allclose(conv2d(x, composed), pointwise_conv(x, pw))


def test_factorization_random_instance(rng):
    x = rng.normal(size=(8, 16, 16))
    d = ConvKernel("depthwise", rng.normal(size=(8, 3, 3)), 1, 1)
    p = ConvKernel("pointwise", rng.normal(size=(16, 8, 1, 1)))
    assert factorization_deviation(d, p, x) < 1e-5


def test_batchnorm_basic_and_oracle(rng):
    x = rng.normal(size=(3, 4, 4))
    ones = np.ones(3)
    zeros = np.zeros(3)
    out = batchnorm(x, ones, zeros, zeros, ones)
    assert np.allclose(out, x / np.sqrt(1 + 1e-5))
    mean = x.mean(axis=(1, 2))
    var = x.var(axis=(1, 2))
    standardized = batchnorm(x, ones, zeros, mean, var)
    assert np.allclose(standardized.mean(axis=(1, 2)), 0.0, atol=1e-12)
    gamma = rng.normal(size=3)
    beta = rng.normal(size=3)
    expect = batchnorm_oracle(x, gamma, beta, mean, var)
    assert np.allclose(batchnorm(x, gamma, beta, mean, var), expect)
    with pytest.raises(ShapeError):
        batchnorm(x, np.ones(2), zeros, zeros, ones)


def test_relu_properties(rng):
    x = rng.normal(size=(2, 3, 3))
    assert np.all(relu(-np.abs(x)) == 0.0)
    assert np.array_equal(relu(np.abs(x)), np.abs(x))
    assert np.array_equal(relu(relu(x)), relu(x))


def test_softmax_rows_sum_to_one(rng):
    z = rng.normal(size=(10, 2)) * 5
    p = softmax(z, axis=1)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-6)
    assert np.all(p >= 0)


def test_out_spatial():
    assert out_spatial(224, 3, 2, 1) == 112
    assert out_spatial(8, 3, 1, 1) == 8
    assert out_spatial(8, 3, 1, 0) == 6


def test_kernel_validation():
    with pytest.raises(ShapeError):
        ConvKernel("conventional", np.zeros((2, 3, 3)))
    with pytest.raises(ShapeError):
        ConvKernel("pointwise", np.zeros((2, 3, 2, 2)))
    with pytest.raises(ShapeError):
        ConvKernel("depthwise", np.zeros((2, 3, 2)))
    with pytest.raises(ConfigError):
        ConvKernel("other", np.zeros((2, 3, 3, 3)))
    with pytest.raises(ConfigError):
        ConvKernel("conventional", np.zeros((2, 3, 3, 3)), stride=0)
