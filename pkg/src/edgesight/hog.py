"""Histogram-of-oriented-gradients descriptors and multi-scale detection.

Gradients are central differences with replicated borders, folded to
unsigned angles in [0, 180). Cell histograms use nine 20-degree bins with
centers at 10, 30, ..., 170 degrees; each pixel's magnitude is split
linearly between the two nearest centers, wrapping across the 0/180 seam.
Blocks of cells are L2-Hys normalized (clip 0.2, renormalize).
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, ConfigError, FormatError
from .geometry import BoundingBox, Detection, clamp_box, merge_biggest_box, nms
from .image import Image
from .pyramid import build_pyramid

BLOCK_NORM_EPS = 1e-5
BLOCK_CLIP = 0.2

HOGSVM_FORMAT_VERSION = 1


@dataclass(frozen=True)
class HogConfig:
    cell_size: int = 8
    block_size: int = 2       # cells per block side
    block_stride: int = 1     # cells
    bins: int = 9
    window_w: int = 64
    window_h: int = 128

    def __post_init__(self):
        if self.bins != 9:
            raise ConfigError("unsigned 20-degree binning requires bins == 9")
        if self.cell_size < 1 or self.block_size < 1 or self.block_stride < 1:
            raise ConfigError("cell/block sizes must be positive")
        if self.window_w % self.cell_size or self.window_h % self.cell_size:
            raise ConfigError("window must be divisible by cell_size")
        if self.cells_x < self.block_size or self.cells_y < self.block_size:
            raise ConfigError("window too small for one block")

    @property
    def cells_x(self) -> int:
        return self.window_w // self.cell_size

    @property
    def cells_y(self) -> int:
        return self.window_h // self.cell_size

    @property
    def blocks_x(self) -> int:
        return (self.cells_x - self.block_size) // self.block_stride + 1

    @property
    def blocks_y(self) -> int:
        return (self.cells_y - self.block_size) // self.block_stride + 1

    @property
    def descriptor_length(self) -> int:
        return (self.blocks_x * self.blocks_y
                * self.block_size * self.block_size * self.bins)


@dataclass(frozen=True)
class GradientField:
    magnitude: np.ndarray  # (h, w), >= 0
    angle: np.ndarray      # (h, w), degrees in [0, 180)


def compute_gradients(img) -> GradientField:
    """Central-difference gradients; borders replicate edge pixels.

    For multi-channel input, each pixel takes the gradient of the channel
    with the largest magnitude at that pixel.
    """
    pixels = img.pixels if isinstance(img, Image) else np.asarray(img, dtype=np.float64)
    if pixels.ndim == 2:
        pixels = pixels[:, :, np.newaxis]
    h, w, c = pixels.shape
    gx = np.empty((c, h, w))
    gy = np.empty((c, h, w))
    for ch in range(c):
        p = np.pad(pixels[:, :, ch], 1, mode="edge")
        gx[ch] = p[1:-1, 2:] - p[1:-1, :-2]
        gy[ch] = p[2:, 1:-1] - p[:-2, 1:-1]
    mag = np.hypot(gx, gy)
    if c == 1:
        best = 0
        magnitude = mag[0]
        bgx, bgy = gx[0], gy[0]
    else:
        best = np.argmax(mag, axis=0)
        take = lambda a: np.take_along_axis(a, best[np.newaxis], axis=0)[0]
        magnitude = take(mag)
        bgx, bgy = take(gx), take(gy)
    angle = np.degrees(np.arctan2(bgy, bgx)) % 180.0
    angle[angle >= 180.0] = 0.0  # guard the fold boundary
    return GradientField(magnitude, angle)


def _vote(magnitude: np.ndarray, angle: np.ndarray, bins: int) -> np.ndarray:
    """Split each magnitude between the two nearest bin centers."""
    width = 180.0 / bins
    t = (angle.ravel() - width / 2.0) / width
    lo = np.floor(t)
    frac = t - lo
    lo_bin = (lo.astype(np.int64)) % bins
    hi_bin = (lo_bin + 1) % bins
    hist = np.zeros(bins, dtype=np.float64)
    m = magnitude.ravel()
    np.add.at(hist, lo_bin, m * (1.0 - frac))
    np.add.at(hist, hi_bin, m * frac)
    return hist


def cell_histogram(field: GradientField, cell: BoundingBox, bins: int = 9) -> np.ndarray:
    """9-vector of orientation votes for one cell of the gradient field."""
    h, w = field.magnitude.shape
    x, y, cw, ch = int(cell.x), int(cell.y), int(cell.w), int(cell.h)
    if x < 0 or y < 0 or x + cw > w or y + ch > h:
        raise BoundsError(f"cell ({x},{y},{cw},{ch}) outside {w}x{h} field")
    return _vote(field.magnitude[y:y + ch, x:x + cw],
                 field.angle[y:y + ch, x:x + cw], bins)


def _block_normalize(v: np.ndarray) -> np.ndarray:
    n1 = v / np.sqrt(np.sum(v * v) + BLOCK_NORM_EPS)
    c = np.minimum(n1, BLOCK_CLIP)
    return c / np.sqrt(np.sum(c * c) + BLOCK_NORM_EPS)


def hog_descriptor(window, cfg: HogConfig = HogConfig()) -> np.ndarray:
    """Block-normalized descriptor of a window-sized image.

    Blocks and cells are traversed row-major; each block concatenates its
    cells' histograms before normalization.
    """
    pixels = window.pixels if isinstance(window, Image) else np.asarray(window)
    hgt, wid = pixels.shape[0], pixels.shape[1]
    if (wid, hgt) != (cfg.window_w, cfg.window_h):
        raise ConfigError(
            f"window is {wid}x{hgt}, config expects {cfg.window_w}x{cfg.window_h}")
    field = compute_gradients(window)

    cs = cfg.cell_size
    cells = np.empty((cfg.cells_y, cfg.cells_x, cfg.bins))
    for cy in range(cfg.cells_y):
        for cx in range(cfg.cells_x):
            cells[cy, cx] = _vote(
                field.magnitude[cy * cs:(cy + 1) * cs, cx * cs:(cx + 1) * cs],
                field.angle[cy * cs:(cy + 1) * cs, cx * cs:(cx + 1) * cs],
                cfg.bins)

    out = np.empty(cfg.descriptor_length)
    blen = cfg.block_size * cfg.block_size * cfg.bins
    i = 0
    for by in range(cfg.blocks_y):
        for bx in range(cfg.blocks_x):
            y0 = by * cfg.block_stride
            x0 = bx * cfg.block_stride
            v = cells[y0:y0 + cfg.block_size, x0:x0 + cfg.block_size].ravel()
            out[i:i + blen] = _block_normalize(v)
            i += blen
    return out


@dataclass(frozen=True)
class HogSvmModel:
    """Linear SVM over HOG descriptors; weights are float32 so the on-disk
    format round-trips bit-exactly."""

    config: HogConfig
    weights: np.ndarray
    bias: float

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float32)
        if w.ndim != 1 or w.shape[0] != self.config.descriptor_length:
            raise ConfigError(
                f"weights length {w.shape} does not match descriptor length "
                f"{self.config.descriptor_length}")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)


def svm_score(model: HogSvmModel, descriptor: np.ndarray) -> float:
    """w . x + b; the predicted class is its sign."""
    x = np.asarray(descriptor, dtype=np.float64)
    if x.shape != model.weights.shape:
        raise ConfigError(
            f"descriptor length {x.shape} does not match weights "
            f"{model.weights.shape}")
    return float(np.dot(model.weights.astype(np.float64), x) + model.bias)


def detect_multiscale(model: HogSvmModel, img: Image, step: int = 8,
                      scale_factor: float = 1.2, merge: str = "nms",
                      threshold: float = 0.0, merge_iou: float = 0.3,
                      label: str = "human") -> list[Detection]:
    """Slide the model window over an image pyramid and merge duplicates.

    Windows scoring above `threshold` become detections in original-image
    pixels; `merge` is "nms" (keep the best score per overlap cluster) or
    "biggest-box" (keep the largest area per cluster).
    """
    if merge not in ("nms", "biggest-box"):
        raise ConfigError(f"merge must be 'nms' or 'biggest-box', got {merge!r}")
    if step < 1:
        raise ConfigError(f"step must be >= 1, got {step}")
    cfg = model.config
    min_side = max(8, min(cfg.window_w, cfg.window_h))
    raw: list[Detection] = []
    for level in build_pyramid(img, scale_factor, min_side):
        lw, lh = level.image.width, level.image.height
        if lw < cfg.window_w or lh < cfg.window_h:
            continue
        pixels = level.image.pixels
        for y in range(0, lh - cfg.window_h + 1, step):
            for x in range(0, lw - cfg.window_w + 1, step):
                descriptor = hog_descriptor(
                    pixels[y:y + cfg.window_h, x:x + cfg.window_w, :], cfg)
                score = svm_score(model, descriptor)
                if score > threshold:
                    box = BoundingBox(x * level.scale, y * level.scale,
                                      cfg.window_w * level.scale,
                                      cfg.window_h * level.scale)
                    box = clamp_box(box, img.width, img.height)
                    if box is not None:
                        raw.append(Detection(box, label, score))
    if merge == "nms":
        return nms(raw, merge_iou)
    return merge_biggest_box(raw, merge_iou)


def save_hog_svm(model: HogSvmModel, path) -> None:
    """Versioned JSON header with a base64 little-endian float32 weight blob."""
    cfg = model.config
    payload = {
        "version": HOGSVM_FORMAT_VERSION,
        "config": {
            "cell_size": cfg.cell_size,
            "block_size": cfg.block_size,
            "block_stride": cfg.block_stride,
            "bins": cfg.bins,
            "window_w": cfg.window_w,
            "window_h": cfg.window_h,
        },
        "bias": model.bias,
        "weights_b64": base64.b64encode(
            model.weights.astype("<f4").tobytes()).decode("ascii"),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_hog_svm(path) -> HogSvmModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc}") from exc
    try:
        if data["version"] != HOGSVM_FORMAT_VERSION:
            raise FormatError(f"unsupported model version {data['version']!r}")
        cfg = HogConfig(**{k: int(v) for k, v in data["config"].items()})
        raw = base64.b64decode(data["weights_b64"].encode("ascii"), validate=True)
        weights = np.frombuffer(raw, dtype="<f4")
        return HogSvmModel(cfg, weights, float(data["bias"]))
    except FormatError:
        raise
    except (KeyError, TypeError, ValueError, ConfigError) as exc:
        raise FormatError(f"invalid model data: {exc}") from exc
