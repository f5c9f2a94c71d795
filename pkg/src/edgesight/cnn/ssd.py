"""Single-shot detection head: default boxes over tapped feature maps,
center-size offset coding, anchor matching, and post-NMS detection.

Anchor order is (map, row, column, aspect ratio) and the prediction convs
reshape to exactly that order, so row i of the head output always describes
anchor i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from ..geometry import BoundingBox, Detection, nms
from ..image import Image
from .layers import ConvLayer
from .ops import softmax

CLASS_BACKGROUND = 0
CLASS_HUMAN = 1


@dataclass(frozen=True)
class SsdHeadConfig:
    img_size: int
    map_sizes: tuple[int, ...]
    aspect_ratios: tuple[float, ...] = (1.0, 2.0, 0.5, 3.0, 1.0 / 3.0)
    scale_min: float = 0.2
    scale_max: float = 0.9
    variances: tuple[float, float] = (0.1, 0.2)

    @property
    def boxes_per_location(self) -> int:
        return len(self.aspect_ratios)

    @property
    def scales(self) -> tuple[float, ...]:
        m = len(self.map_sizes)
        if m == 1:
            return (self.scale_min,)
        # convex form keeps the endpoints exact
        return tuple((self.scale_min * (m - 1 - k) + self.scale_max * k) / (m - 1)
                     for k in range(m))

    @property
    def num_anchors(self) -> int:
        return sum(f * f * self.boxes_per_location for f in self.map_sizes)


def default_boxes(cfg: SsdHeadConfig) -> np.ndarray:
    """(A, 4) anchors as (cx, cy, w, h) in pixels."""
    rows = []
    for fk, sk in zip(cfg.map_sizes, cfg.scales):
        cell = cfg.img_size / fk
        side = cfg.img_size * sk
        for y in range(fk):
            for x in range(fk):
                cx = (x + 0.5) * cell
                cy = (y + 0.5) * cell
                for r in cfg.aspect_ratios:
                    rows.append((cx, cy, side * np.sqrt(r), side / np.sqrt(r)))
    return np.asarray(rows, dtype=np.float64)


def _corners(anchors: np.ndarray) -> np.ndarray:
    out = np.empty_like(anchors)
    out[:, 0] = anchors[:, 0] - anchors[:, 2] / 2
    out[:, 1] = anchors[:, 1] - anchors[:, 3] / 2
    out[:, 2] = anchors[:, 0] + anchors[:, 2] / 2
    out[:, 3] = anchors[:, 1] + anchors[:, 3] / 2
    return out


def encode_box(gt: BoundingBox, anchor, variances=(0.1, 0.2)) -> np.ndarray:
    """Regression target that decodes back to `gt` from `anchor` (cx,cy,w,h)."""
    acx, acy, aw, ah = anchor
    gcx = gt.x + gt.w / 2
    gcy = gt.y + gt.h / 2
    vc, vs = variances
    return np.array([
        (gcx - acx) / (aw * vc),
        (gcy - acy) / (ah * vc),
        np.log(gt.w / aw) / vs,
        np.log(gt.h / ah) / vs,
    ])


def decode_boxes(offsets: np.ndarray, anchors: np.ndarray,
                 cfg: SsdHeadConfig) -> np.ndarray:
    """(A, 4) corner boxes, clamped to the image square.

    Zero offsets decode to the default boxes themselves.
    """
    vc, vs = cfg.variances
    cx = anchors[:, 0] + offsets[:, 0] * vc * anchors[:, 2]
    cy = anchors[:, 1] + offsets[:, 1] * vc * anchors[:, 3]
    w = anchors[:, 2] * np.exp(offsets[:, 2] * vs)
    h = anchors[:, 3] * np.exp(offsets[:, 3] * vs)
    boxes = np.stack([cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2], axis=1)
    return np.clip(boxes, 0.0, float(cfg.img_size))


def anchor_iou(gt: BoundingBox, anchors_corner: np.ndarray) -> np.ndarray:
    ix = (np.minimum(anchors_corner[:, 2], gt.right)
          - np.maximum(anchors_corner[:, 0], gt.x))
    iy = (np.minimum(anchors_corner[:, 3], gt.bottom)
          - np.maximum(anchors_corner[:, 1], gt.y))
    inter = np.clip(ix, 0, None) * np.clip(iy, 0, None)
    area_a = ((anchors_corner[:, 2] - anchors_corner[:, 0])
              * (anchors_corner[:, 3] - anchors_corner[:, 1]))
    return inter / (area_a + gt.area - inter)


def match_anchors(gt_boxes, anchors: np.ndarray, iou_threshold: float = 0.5):
    """(positive mask (A,), matched gt index (A,)).

    An anchor is positive when its IoU with some ground-truth box reaches
    the threshold; additionally every ground-truth box claims its best
    anchor so no object is left unmatched.
    """
    a = anchors.shape[0]
    positive = np.zeros(a, dtype=bool)
    matched = np.zeros(a, dtype=np.int64)
    if not gt_boxes:
        return positive, matched
    corners = _corners(anchors)
    ious = np.stack([anchor_iou(gt, corners) for gt in gt_boxes], axis=1)  # (A, G)
    best_gt = ious.argmax(axis=1)
    best_iou = ious.max(axis=1)
    positive = best_iou >= iou_threshold
    matched = best_gt
    for g in range(len(gt_boxes)):
        i = int(ious[:, g].argmax())
        positive[i] = True
        matched[i] = g
    return positive, matched


class SsdHead:
    """Per-tap 3x3 prediction convolutions for class scores and offsets."""

    def __init__(self, cfg: SsdHeadConfig, tap_channels, rng=None,
                 dtype=np.float32):
        if len(tap_channels) != len(cfg.map_sizes):
            raise ShapeError("one tap channel count per feature map required")
        rng = rng or np.random.default_rng(0)
        self.cfg = cfg
        r = cfg.boxes_per_location
        self.cls_convs = [ConvLayer(c, r * 2, 3, 1, 1, bias=True, rng=rng,
                                    dtype=dtype) for c in tap_channels]
        self.box_convs = [ConvLayer(c, r * 4, 3, 1, 1, bias=True, rng=rng,
                                    dtype=dtype) for c in tap_channels]
        self.anchors = default_boxes(cfg)

    def conv_layers(self):
        return list(self.cls_convs) + list(self.box_convs)

    def _flatten(self, raw: np.ndarray, per: int) -> np.ndarray:
        # (r*per, h, w) -> (h*w*r, per), matching anchor order
        r = self.cfg.boxes_per_location
        h, w = raw.shape[1], raw.shape[2]
        return raw.reshape(r, per, h, w).transpose(2, 3, 0, 1).reshape(-1, per)

    def _unflatten(self, flat: np.ndarray, per: int, side: int) -> np.ndarray:
        r = self.cfg.boxes_per_location
        return (flat.reshape(side, side, r, per).transpose(2, 3, 0, 1)
                .reshape(r * per, side, side))

    def forward(self, taps, train: bool = False):
        logits, offsets = [], []
        for tap, cls_conv, box_conv in zip(taps, self.cls_convs, self.box_convs):
            logits.append(self._flatten(cls_conv.forward(tap, train), 2))
            offsets.append(self._flatten(box_conv.forward(tap, train), 4))
        return np.concatenate(logits, axis=0), np.concatenate(offsets, axis=0)

    def backward(self, dlogits, doffsets):
        """Input gradients for each tapped feature map."""
        dtaps = []
        start = 0
        for side, cls_conv, box_conv in zip(self.cfg.map_sizes, self.cls_convs,
                                            self.box_convs):
            count = side * side * self.cfg.boxes_per_location
            dcls = self._unflatten(dlogits[start:start + count], 2, side)
            dbox = self._unflatten(doffsets[start:start + count], 4, side)
            dtaps.append(cls_conv.backward(dcls) + box_conv.backward(dbox))
            start += count
        return dtaps


def ssd_detect(model, img: Image, conf_threshold: float = 0.5,
               nms_iou: float = 0.45, label: str = "human") -> list[Detection]:
    """One forward pass -> thresholded, NMS-merged detections.

    The image must already be at the model's input size; feed it through
    `edgesight.image.resize_nearest` first if needed.
    """
    if (img.width, img.height) != (model.input_size, model.input_size):
        raise ShapeError(
            f"expected a {model.input_size}x{model.input_size} image, "
            f"got {img.width}x{img.height}")
    from .architecture import image_to_tensor  # local import to avoid a cycle

    logits, offsets = model.predict(image_to_tensor(img), train=False)
    probs = softmax(logits.astype(np.float64), axis=1)[:, CLASS_HUMAN]
    keep = probs >= conf_threshold
    if not np.any(keep):
        return []
    boxes = decode_boxes(offsets[keep].astype(np.float64),
                         model.head.anchors[keep], model.head.cfg)
    detections = []
    for (x0, y0, x1, y1), p in zip(boxes, probs[keep]):
        if x1 - x0 > 0 and y1 - y0 > 0:
            detections.append(Detection(BoundingBox(x0, y0, x1 - x0, y1 - y0),
                                        label, float(p)))
    return nms(detections, nms_iou)
