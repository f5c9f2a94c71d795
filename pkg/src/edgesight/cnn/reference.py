"""Instrumented scalar-loop convolutions.

These are the direct-loop twins of the vectorized ops: plain nested loops
over python lists that count every scalar multiply, including taps landing
on zero padding. With stride 1 and same-padding the counts reproduce the
closed-form multiply-accumulate formulas of the complexity analyzer
exactly, and the outputs cross-check the fast path.
"""

from __future__ import annotations

import numpy as np

from .ops import ConvKernel, out_spatial


def conv2d_reference(x, kernel: ConvKernel):
    """(output, multiply_count) via six nested loops."""
    x = np.asarray(x, dtype=np.float64)
    m, ih, iw = x.shape
    n = kernel.out_channels
    k, s, p = kernel.size, kernel.stride, kernel.padding
    oh, ow = out_spatial(ih, k, s, p), out_spatial(iw, k, s, p)

    xp = np.zeros((m, ih + 2 * p, iw + 2 * p))
    xp[:, p:p + ih, p:p + iw] = x
    xl = xp.tolist()
    wl = np.asarray(kernel.weights, dtype=np.float64).tolist()

    out = np.zeros((n, oh, ow))
    count = 0
    for cn in range(n):
        wn = wl[cn]
        for oy in range(oh):
            for ox in range(ow):
                acc = 0.0
                for cm in range(m):
                    plane = xl[cm]
                    wm = wn[cm]
                    for i in range(k):
                        row = plane[oy * s + i]
                        wrow = wm[i]
                        for j in range(k):
                            acc += wrow[j] * row[ox * s + j]
                            count += 1
                out[cn, oy, ox] = acc
    return out, count


def depthwise_reference(x, kernel: ConvKernel):
    """(output, multiply_count): filter m convolves channel m only."""
    x = np.asarray(x, dtype=np.float64)
    m, ih, iw = x.shape
    k, s, p = kernel.size, kernel.stride, kernel.padding
    oh, ow = out_spatial(ih, k, s, p), out_spatial(iw, k, s, p)

    xp = np.zeros((m, ih + 2 * p, iw + 2 * p))
    xp[:, p:p + ih, p:p + iw] = x
    xl = xp.tolist()
    wl = np.asarray(kernel.weights, dtype=np.float64).tolist()

    out = np.zeros((m, oh, ow))
    count = 0
    for cm in range(m):
        plane = xl[cm]
        wm = wl[cm]
        for oy in range(oh):
            for ox in range(ow):
                acc = 0.0
                for i in range(k):
                    row = plane[oy * s + i]
                    wrow = wm[i]
                    for j in range(k):
                        acc += wrow[j] * row[ox * s + j]
                        count += 1
                out[cm, oy, ox] = acc
    return out, count


def pointwise_reference(x, kernel: ConvKernel):
    """(output, multiply_count): per-pixel channel mixing."""
    x = np.asarray(x, dtype=np.float64)
    m, ih, iw = x.shape
    n = kernel.out_channels
    s, p = kernel.stride, kernel.padding
    oh, ow = out_spatial(ih, 1, s, p), out_spatial(iw, 1, s, p)

    xp = np.zeros((m, ih + 2 * p, iw + 2 * p))
    xp[:, p:p + ih, p:p + iw] = x
    xl = xp.tolist()
    wl = np.asarray(kernel.weights, dtype=np.float64)[:, :, 0, 0].tolist()

    out = np.zeros((n, oh, ow))
    count = 0
    for cn in range(n):
        wn = wl[cn]
        for oy in range(oh):
            for ox in range(ow):
                acc = 0.0
                for cm in range(m):
                    acc += wn[cm] * xl[cm][oy * s][ox * s]
                    count += 1
                out[cn, oy, ox] = acc
    return out, count
