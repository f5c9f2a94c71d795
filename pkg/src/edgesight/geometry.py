"""Axis-aligned boxes, detections, IoU, and duplicate-box merging rules."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InputError


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box: (x, y) is the top-left corner, w/h the extent."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise InputError(f"box must have positive size, got w={self.w} h={self.h}")

    @property
    def right(self) -> float:
        return self.x + self.w

    @property
    def bottom(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h


@dataclass(frozen=True)
class Detection:
    """A detected object: box in source-image pixels, class label, score."""

    box: BoundingBox
    label: str
    score: float


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two boxes, in [0, 1]."""
    ix = min(a.right, b.right) - max(a.x, b.x)
    iy = min(a.bottom, b.bottom) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def clamp_box(box: BoundingBox, width: float, height: float) -> BoundingBox | None:
    """Clip a box to [0, width] x [0, height]; None when nothing remains."""
    x0 = max(0.0, box.x)
    y0 = max(0.0, box.y)
    x1 = min(float(width), box.right)
    y1 = min(float(height), box.bottom)
    if x1 - x0 <= 0 or y1 - y0 <= 0:
        return None
    return BoundingBox(x0, y0, x1 - x0, y1 - y0)


def nms(detections, iou_threshold: float = 0.3) -> list[Detection]:
    """Greedy non-maximum suppression: keep the highest score per cluster.

    Deterministic: ties broken by input order (stable sort). Idempotent.
    """
    order = sorted(range(len(detections)), key=lambda i: -detections[i].score)
    kept: list[Detection] = []
    for i in order:
        det = detections[i]
        if all(iou(det.box, k.box) <= iou_threshold for k in kept):
            kept.append(det)
    return kept


def merge_biggest_box(detections, iou_threshold: float = 0.3) -> list[Detection]:
    """Keep the largest-area box of each overlapping cluster.

    This is the simple duplicate-handling heuristic used when a sliding-window
    detector fires several times on one object; compare against `nms`.
    """
    order = sorted(range(len(detections)), key=lambda i: -detections[i].box.area)
    kept: list[Detection] = []
    for i in order:
        det = detections[i]
        if all(iou(det.box, k.box) <= iou_threshold for k in kept):
            kept.append(det)
    return kept
