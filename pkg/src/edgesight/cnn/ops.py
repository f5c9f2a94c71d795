"""Functional tensor ops on (channels, height, width) arrays.

Convolutions are implemented as a sum over kernel offsets of BLAS-backed
channel contractions on strided views -- fast enough for 224x224 inference
in plain numpy. The instrumented scalar-loop versions of the same ops live
in `reference` and the two paths must agree to 1e-5; tests enforce that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ShapeError

KINDS = ("conventional", "depthwise", "pointwise")


@dataclass(frozen=True)
class ConvKernel:
    """Convolution weights plus stride/padding.

    Weight shapes: conventional (N, M, k, k); depthwise (M, k, k) with one
    spatial filter per input channel; pointwise (N, M, 1, 1).
    """

    kind: str
    weights: np.ndarray
    stride: int = 1
    padding: int = 0

    def __post_init__(self):
        w = np.asarray(self.weights)
        if self.kind == "conventional":
            if w.ndim != 4 or w.shape[2] != w.shape[3]:
                raise ShapeError(f"conventional kernel needs (N, M, k, k), got {w.shape}")
        elif self.kind == "depthwise":
            if w.ndim != 3 or w.shape[1] != w.shape[2]:
                raise ShapeError(f"depthwise kernel needs (M, k, k), got {w.shape}")
        elif self.kind == "pointwise":
            if w.ndim != 4 or w.shape[2:] != (1, 1):
                raise ShapeError(f"pointwise kernel needs (N, M, 1, 1), got {w.shape}")
        else:
            raise ConfigError(f"unknown kernel kind {self.kind!r}")
        if self.stride < 1 or self.padding < 0:
            raise ConfigError(f"bad stride/padding {self.stride}/{self.padding}")
        object.__setattr__(self, "weights", w)

    @property
    def in_channels(self) -> int:
        return self.weights.shape[0] if self.kind == "depthwise" else self.weights.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def size(self) -> int:
        """Spatial kernel side D_k."""
        if self.kind == "pointwise":
            return 1
        return self.weights.shape[-1]


def out_spatial(in_size: int, k: int, stride: int, padding: int) -> int:
    return (in_size + 2 * padding - k) // stride + 1


def _check_input(x, kernel):
    x = np.asarray(x)
    if x.ndim != 3:
        raise ShapeError(f"input must be (channels, h, w), got {x.shape}")
    if x.shape[0] != kernel.in_channels:
        raise ShapeError(
            f"input has {x.shape[0]} channels, kernel expects {kernel.in_channels}")
    oh = out_spatial(x.shape[1], kernel.size, kernel.stride, kernel.padding)
    ow = out_spatial(x.shape[2], kernel.size, kernel.stride, kernel.padding)
    if oh < 1 or ow < 1:
        raise ShapeError(f"kernel {kernel.size} too large for input {x.shape}")
    return x, oh, ow


def _pad(x, p):
    if p == 0:
        return x
    return np.pad(x, ((0, 0), (p, p), (p, p)))


def conv2d(x, kernel: ConvKernel) -> np.ndarray:
    """Conventional convolution with zero padding.

    out[n, h, w] = sum_{m,i,j} W[n, m, i, j] * x[m, h*s - p + i, w*s - p + j]
    """
    if kernel.kind != "conventional":
        raise ConfigError(f"conv2d needs a conventional kernel, got {kernel.kind}")
    x, oh, ow = _check_input(x, kernel)
    w = kernel.weights
    dtype = np.result_type(x.dtype, w.dtype)
    xp = _pad(x.astype(dtype, copy=False), kernel.padding)
    s, k = kernel.stride, kernel.size
    out = np.zeros((kernel.out_channels, oh, ow), dtype=dtype)
    for i in range(k):
        for j in range(k):
            view = xp[:, i:i + s * oh:s, j:j + s * ow:s]
            out += np.tensordot(w[:, :, i, j].astype(dtype, copy=False),
                                view, axes=([1], [0]))
    return out


def depthwise_conv(x, kernel: ConvKernel) -> np.ndarray:
    """Per-channel spatial convolution: filter m is applied to channel m."""
    if kernel.kind != "depthwise":
        raise ConfigError(f"depthwise_conv needs a depthwise kernel, got {kernel.kind}")
    x, oh, ow = _check_input(x, kernel)
    w = kernel.weights
    dtype = np.result_type(x.dtype, w.dtype)
    xp = _pad(x.astype(dtype, copy=False), kernel.padding)
    s, k = kernel.stride, kernel.size
    out = np.zeros((kernel.out_channels, oh, ow), dtype=dtype)
    for i in range(k):
        for j in range(k):
            view = xp[:, i:i + s * oh:s, j:j + s * ow:s]
            out += w[:, i, j].astype(dtype, copy=False)[:, None, None] * view
    return out


def pointwise_conv(x, kernel: ConvKernel) -> np.ndarray:
    """1x1 cross-channel mixing: an (N, M) matrix applied at every pixel."""
    if kernel.kind != "pointwise":
        raise ConfigError(f"pointwise_conv needs a pointwise kernel, got {kernel.kind}")
    x, oh, ow = _check_input(x, kernel)
    mat = kernel.weights[:, :, 0, 0]
    dtype = np.result_type(x.dtype, mat.dtype)
    xp = _pad(x.astype(dtype, copy=False), kernel.padding)
    s = kernel.stride
    view = xp[:, 0:0 + s * oh:s, 0:0 + s * ow:s]
    return np.tensordot(mat.astype(dtype, copy=False), view, axes=([1], [0]))


def compose_separable(depthwise_k: ConvKernel, pointwise_k: ConvKernel) -> ConvKernel:
    """Conventional kernel equivalent to pointwise(depthwise(x)).

    K[n, m, i, j] = D[m, i, j] * P[n, m]. Valid when the pointwise step has
    stride 1 and no padding; stride/padding of the depthwise step carry over.
    """
    if depthwise_k.kind != "depthwise" or pointwise_k.kind != "pointwise":
        raise ConfigError("expected a (depthwise, pointwise) pair")
    if pointwise_k.stride != 1 or pointwise_k.padding != 0:
        raise ConfigError("composition requires stride-1, unpadded pointwise")
    if pointwise_k.in_channels != depthwise_k.out_channels:
        raise ShapeError("channel mismatch between depthwise and pointwise")
    d = depthwise_k.weights
    p = pointwise_k.weights[:, :, 0, 0]
    composed = p[:, :, None, None] * d[None, :, :, :]
    return ConvKernel("conventional", composed, depthwise_k.stride,
                      depthwise_k.padding)


def factorization_deviation(depthwise_k: ConvKernel, pointwise_k: ConvKernel,
                            x) -> float:
    """Largest deviation between the two-step separable path and the
    composed conventional kernel, relative to the largest output magnitude."""
    two_step = pointwise_conv(depthwise_conv(x, depthwise_k), pointwise_k)
    one_step = conv2d(x, compose_separable(depthwise_k, pointwise_k))
    scale = max(np.abs(two_step).max(initial=0.0),
                np.abs(one_step).max(initial=0.0), 1e-300)
    return float(np.abs(two_step - one_step).max(initial=0.0) / scale)


def batchnorm(x, gamma, beta, mean, var, eps: float = 1e-5) -> np.ndarray:
    """Per-channel affine normalization with the given statistics."""
    x = np.asarray(x)
    c = x.shape[0]
    gamma, beta, mean, var = (np.asarray(v) for v in (gamma, beta, mean, var))
    for name, v in (("gamma", gamma), ("beta", beta), ("mean", mean), ("var", var)):
        if v.shape != (c,):
            raise ShapeError(f"{name} must have shape ({c},), got {v.shape}")
    inv = 1.0 / np.sqrt(var + eps)
    return (x - mean[:, None, None]) * (gamma * inv)[:, None, None] + beta[:, None, None]


def relu(x) -> np.ndarray:
    return np.maximum(x, 0)


def softmax(x, axis: int = -1) -> np.ndarray:
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)
