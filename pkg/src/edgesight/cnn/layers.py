"""Trainable layers: forward caches what backward needs; backward accumulates
parameter gradients into `grads` and returns the input gradient.

All layers act on single (channels, height, width) tensors. Batch training
is done by accumulating gradients over images before an update step.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeError
from .ops import out_spatial

BN_EPS = 1e-5


class Layer:
    op = "?"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def zero_grads(self):
        for k in self.grads:
            self.grads[k][...] = 0.0

    def forward(self, x, train: bool = False):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError

    def param_count(self) -> int:
        return int(sum(p.size for p in self.params.values()))


def he_uniform(rng, shape, fan_in, dtype):
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class ConvLayer(Layer):
    """Conventional convolution, optionally with a per-filter bias."""

    op = "conv"

    def __init__(self, in_channels, out_channels, kernel_size, stride=1,
                 padding=0, bias=False, rng=None, dtype=np.float32):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        self.padding = padding
        rng = rng or np.random.default_rng(0)
        fan_in = in_channels * kernel_size * kernel_size
        self.params["w"] = he_uniform(
            rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in, dtype)
        self.grads["w"] = np.zeros_like(self.params["w"])
        if bias:
            self.params["b"] = np.zeros(out_channels, dtype=dtype)
            self.grads["b"] = np.zeros_like(self.params["b"])
        self._x = None

    def forward(self, x, train: bool = False):
        if x.shape[0] != self.in_channels:
            raise ShapeError(f"expected {self.in_channels} channels, got {x.shape[0]}")
        s, k, p = self.stride, self.kernel_size, self.padding
        oh = out_spatial(x.shape[1], k, s, p)
        ow = out_spatial(x.shape[2], k, s, p)
        xp = np.pad(x, ((0, 0), (p, p), (p, p))) if p else x
        self._x = xp
        self._in_shape = x.shape
        w = self.params["w"]
        out = np.zeros((self.out_channels, oh, ow), dtype=xp.dtype)
        for i in range(k):
            for j in range(k):
                view = xp[:, i:i + s * oh:s, j:j + s * ow:s]
                out += np.tensordot(w[:, :, i, j], view, axes=([1], [0]))
        if "b" in self.params:
            out += self.params["b"][:, None, None]
        return out

    def backward(self, dout):
        xp = self._x
        s, k, p = self.stride, self.kernel_size, self.padding
        oh, ow = dout.shape[1], dout.shape[2]
        w = self.params["w"]
        dxp = np.zeros_like(xp)
        dw = self.grads["w"]
        for i in range(k):
            for j in range(k):
                view = xp[:, i:i + s * oh:s, j:j + s * ow:s]
                dw[:, :, i, j] += np.tensordot(dout, view, axes=([1, 2], [1, 2]))
                dxp[:, i:i + s * oh:s, j:j + s * ow:s] += np.tensordot(
                    w[:, :, i, j], dout, axes=([0], [0]))
        if "b" in self.params:
            self.grads["b"] += dout.sum(axis=(1, 2))
        if p:
            return dxp[:, p:-p, p:-p]
        return dxp


class DepthwiseConvLayer(Layer):
    """One spatial filter per channel; channel count is preserved."""

    op = "depthwise"

    def __init__(self, channels, kernel_size, stride=1, padding=0, rng=None,
                 dtype=np.float32):
        super().__init__()
        self.in_channels = channels
        self.out_channels = channels
        self.kernel_size = kernel_size
        self.stride = stride
        self.padding = padding
        rng = rng or np.random.default_rng(0)
        fan_in = kernel_size * kernel_size
        self.params["w"] = he_uniform(
            rng, (channels, kernel_size, kernel_size), fan_in, dtype)
        self.grads["w"] = np.zeros_like(self.params["w"])
        self._x = None

    def forward(self, x, train: bool = False):
        if x.shape[0] != self.in_channels:
            raise ShapeError(f"expected {self.in_channels} channels, got {x.shape[0]}")
        s, k, p = self.stride, self.kernel_size, self.padding
        oh = out_spatial(x.shape[1], k, s, p)
        ow = out_spatial(x.shape[2], k, s, p)
        xp = np.pad(x, ((0, 0), (p, p), (p, p))) if p else x
        self._x = xp
        w = self.params["w"]
        out = np.zeros((self.out_channels, oh, ow), dtype=xp.dtype)
        for i in range(k):
            for j in range(k):
                view = xp[:, i:i + s * oh:s, j:j + s * ow:s]
                out += w[:, i, j][:, None, None] * view
        return out

    def backward(self, dout):
        xp = self._x
        s, k, p = self.stride, self.kernel_size, self.padding
        oh, ow = dout.shape[1], dout.shape[2]
        w = self.params["w"]
        dxp = np.zeros_like(xp)
        dw = self.grads["w"]
        for i in range(k):
            for j in range(k):
                view = xp[:, i:i + s * oh:s, j:j + s * ow:s]
                dw[:, i, j] += (dout * view).sum(axis=(1, 2))
                dxp[:, i:i + s * oh:s, j:j + s * ow:s] += w[:, i, j][:, None, None] * dout
        if p:
            return dxp[:, p:-p, p:-p]
        return dxp


class PointwiseConvLayer(Layer):
    """1x1 channel mixing (stride 1, no padding)."""

    op = "pointwise"

    def __init__(self, in_channels, out_channels, rng=None, dtype=np.float32):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = 1
        self.stride = 1
        self.padding = 0
        rng = rng or np.random.default_rng(0)
        self.params["w"] = he_uniform(rng, (out_channels, in_channels),
                                      in_channels, dtype)
        self.grads["w"] = np.zeros_like(self.params["w"])
        self._x = None

    def forward(self, x, train: bool = False):
        if x.shape[0] != self.in_channels:
            raise ShapeError(f"expected {self.in_channels} channels, got {x.shape[0]}")
        self._x = x
        return np.tensordot(self.params["w"], x, axes=([1], [0]))

    def backward(self, dout):
        self.grads["w"] += np.tensordot(dout, self._x, axes=([1, 2], [1, 2]))
        return np.tensordot(self.params["w"], dout, axes=([0], [0]))


class BatchNormLayer(Layer):
    """Per-channel normalization over spatial positions.

    Training mode normalizes with the current tensor's spatial statistics
    and updates running averages; eval mode uses the running statistics.
    Backward implements the full gradient (through mean and variance) in
    training mode.
    """

    op = "batchnorm"

    def __init__(self, channels, eps=BN_EPS, momentum=0.9, dtype=np.float32):
        super().__init__()
        self.in_channels = channels
        self.out_channels = channels
        self.eps = eps
        self.momentum = momentum
        self.frozen = False  # frozen: use running stats even in train mode
        self.params["gamma"] = np.ones(channels, dtype=dtype)
        self.params["beta"] = np.zeros(channels, dtype=dtype)
        self.grads["gamma"] = np.zeros_like(self.params["gamma"])
        self.grads["beta"] = np.zeros_like(self.params["beta"])
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self._cache = None

    def forward(self, x, train: bool = False):
        if x.shape[0] != self.in_channels:
            raise ShapeError(f"expected {self.in_channels} channels, got {x.shape[0]}")
        batch_stats = train and not self.frozen
        if batch_stats:
            mean = x.mean(axis=(1, 2))
            var = x.var(axis=(1, 2))
            m = self.momentum
            self.running_mean[...] = m * self.running_mean + (1 - m) * mean
            self.running_var[...] = m * self.running_var + (1 - m) * var
        else:
            mean = self.running_mean
            var = self.running_var
        inv = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean[:, None, None]) * inv[:, None, None]
        self._cache = (xhat, inv, batch_stats)
        g = self.params["gamma"]
        b = self.params["beta"]
        return g[:, None, None] * xhat + b[:, None, None]

    def backward(self, dout):
        xhat, inv, batch_stats = self._cache
        g = self.params["gamma"]
        self.grads["gamma"] += (dout * xhat).sum(axis=(1, 2))
        self.grads["beta"] += dout.sum(axis=(1, 2))
        dxhat = dout * g[:, None, None]
        if not batch_stats:
            return dxhat * inv[:, None, None]
        n = xhat.shape[1] * xhat.shape[2]
        sum_d = dxhat.sum(axis=(1, 2), keepdims=True)
        sum_dx = (dxhat * xhat).sum(axis=(1, 2), keepdims=True)
        return (inv[:, None, None] / n) * (n * dxhat - sum_d - xhat * sum_dx)


class ReLULayer(Layer):
    op = "relu"

    def __init__(self):
        super().__init__()
        self._mask = None

    def forward(self, x, train: bool = False):
        self._mask = x > 0
        return np.where(self._mask, x, np.zeros((), dtype=x.dtype))

    def backward(self, dout):
        return np.where(self._mask, dout, np.zeros((), dtype=dout.dtype))
