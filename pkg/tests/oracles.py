"""Independent brute-force implementations used as test oracles.

Everything here is written as plain scalar loops straight from the
mathematical definitions, deliberately ignoring the library's vectorized
and instrumented code paths.
"""

import math

import numpy as np


def rect_sum_oracle(pixels2d, x, y, w, h):
    total = 0.0
    for yy in range(y, y + h):
        for xx in range(x, x + w):
            total += pixels2d[yy][xx]
    return total


def conv2d_oracle(x, w, stride, padding):
    """out[n,h,w] = sum_{m,i,j} w[n,m,i,j] * xpad[m, h*s+i, w*s+j]."""
    m, ih, iw = x.shape
    n, _, k, _ = w.shape
    oh = (ih + 2 * padding - k) // stride + 1
    ow = (iw + 2 * padding - k) // stride + 1
    xp = np.zeros((m, ih + 2 * padding, iw + 2 * padding))
    xp[:, padding:padding + ih, padding:padding + iw] = x
    out = np.zeros((n, oh, ow))
    for cn in range(n):
        for oy in range(oh):
            for ox in range(ow):
                acc = 0.0
                for cm in range(m):
                    for i in range(k):
                        for j in range(k):
                            acc += w[cn, cm, i, j] * xp[cm, oy * stride + i,
                                                        ox * stride + j]
                out[cn, oy, ox] = acc
    return out


def depthwise_oracle(x, w, stride, padding):
    m, ih, iw = x.shape
    _, k, _ = w.shape
    oh = (ih + 2 * padding - k) // stride + 1
    ow = (iw + 2 * padding - k) // stride + 1
    xp = np.zeros((m, ih + 2 * padding, iw + 2 * padding))
    xp[:, padding:padding + ih, padding:padding + iw] = x
    out = np.zeros((m, oh, ow))
    for cm in range(m):
        for oy in range(oh):
            for ox in range(ow):
                acc = 0.0
                for i in range(k):
                    for j in range(k):
                        acc += w[cm, i, j] * xp[cm, oy * stride + i,
                                                ox * stride + j]
                out[cm, oy, ox] = acc
    return out


def pointwise_oracle(x, w):
    """w is (n, m); per-pixel matrix multiply."""
    m, ih, iw = x.shape
    n = w.shape[0]
    out = np.zeros((n, ih, iw))
    for cn in range(n):
        for oy in range(ih):
            for ox in range(iw):
                acc = 0.0
                for cm in range(m):
                    acc += w[cn, cm] * x[cm, oy, ox]
                out[cn, oy, ox] = acc
    return out


def batchnorm_oracle(x, gamma, beta, mean, var, eps=1e-5):
    c, h, w = x.shape
    out = np.zeros_like(x, dtype=np.float64)
    for cc in range(c):
        for yy in range(h):
            for xx in range(w):
                out[cc, yy, xx] = ((x[cc, yy, xx] - mean[cc])
                                   / math.sqrt(var[cc] + eps)
                                   * gamma[cc] + beta[cc])
    return out


def cell_histogram_oracle(mags, angles, bins=9):
    """Per-pixel linear vote split between the two nearest bin centers."""
    width = 180.0 / bins
    hist = [0.0] * bins
    h, w = mags.shape
    for yy in range(h):
        for xx in range(w):
            a = angles[yy, xx]
            m = mags[yy, xx]
            t = (a - width / 2.0) / width
            lo = math.floor(t)
            frac = t - lo
            hist[lo % bins] += m * (1.0 - frac)
            hist[(lo + 1) % bins] += m * frac
    return np.asarray(hist)


def hog_descriptor_oracle(pixels2d, cell=8, block=2, stride=1, bins=9,
                          eps=1e-5, clip=0.2):
    """Full descriptor of a single-channel window by scalar loops."""
    h, w = pixels2d.shape
    # replicated-border central differences
    gx = np.zeros((h, w))
    gy = np.zeros((h, w))
    mag = np.zeros((h, w))
    ang = np.zeros((h, w))
    for yy in range(h):
        for xx in range(w):
            left = pixels2d[yy][max(xx - 1, 0)]
            right = pixels2d[yy][min(xx + 1, w - 1)]
            up = pixels2d[max(yy - 1, 0)][xx]
            down = pixels2d[min(yy + 1, h - 1)][xx]
            gx[yy, xx] = right - left
            gy[yy, xx] = down - up
            mag[yy, xx] = math.hypot(gx[yy, xx], gy[yy, xx])
            a = math.degrees(math.atan2(gy[yy, xx], gx[yy, xx])) % 180.0
            ang[yy, xx] = 0.0 if a >= 180.0 else a

    cells_y, cells_x = h // cell, w // cell
    hists = np.zeros((cells_y, cells_x, bins))
    for cy in range(cells_y):
        for cx in range(cells_x):
            hists[cy, cx] = cell_histogram_oracle(
                mag[cy * cell:(cy + 1) * cell, cx * cell:(cx + 1) * cell],
                ang[cy * cell:(cy + 1) * cell, cx * cell:(cx + 1) * cell],
                bins)

    blocks_y = (cells_y - block) // stride + 1
    blocks_x = (cells_x - block) // stride + 1
    out = []
    for by in range(blocks_y):
        for bx in range(blocks_x):
            v = hists[by * stride:by * stride + block,
                      bx * stride:bx * stride + block].ravel()
            n1 = v / math.sqrt(float(np.dot(v, v)) + eps)
            c = np.minimum(n1, clip)
            n2 = c / math.sqrt(float(np.dot(c, c)) + eps)
            out.extend(n2.tolist())
    return np.asarray(out)


def match_oracle(pred_boxes_scores, gt_boxes, iou_threshold):
    """Greedy score-ordered matching; boxes are (x, y, w, h) tuples."""

    def box_iou(a, b):
        ax, ay, aw, ah = a
        bx, by, bw, bh = b
        ix = min(ax + aw, bx + bw) - max(ax, bx)
        iy = min(ay + ah, by + bh) - max(ay, by)
        if ix <= 0 or iy <= 0:
            return 0.0
        inter = ix * iy
        return inter / (aw * ah + bw * bh - inter)

    order = sorted(range(len(pred_boxes_scores)),
                   key=lambda i: -pred_boxes_scores[i][1])
    taken = [False] * len(gt_boxes)
    tp = fp = 0
    for i in order:
        box = pred_boxes_scores[i][0]
        best_j, best_v = -1, 0.0
        for j, g in enumerate(gt_boxes):
            if taken[j]:
                continue
            v = box_iou(box, g)
            if v > best_v:
                best_v, best_j = v, j
        if best_j >= 0 and best_v >= iou_threshold:
            taken[best_j] = True
            tp += 1
        else:
            fp += 1
    return tp, fp, len(gt_boxes) - tp


def numeric_gradient(f, x, h=1e-4):
    """Central-difference gradient of scalar f at array x."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.ravel()
    gflat = grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2 * h)
    return grad


def rel_error(a, b, floor=1e-12):
    """Norm-based relative deviation between two gradient arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = max(np.linalg.norm(a.ravel()), np.linalg.norm(b.ravel()), floor)
    return float(np.linalg.norm((a - b).ravel()) / denom)


def max_rel_deviation(a, b):
    """Largest |a-b| relative to the largest magnitude in either array."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0), 1e-300)
    return float(np.abs(a - b).max(initial=0.0) / scale)
