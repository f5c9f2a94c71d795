"""Integral images: O(1) rectangle sums over a cumulative-sum table."""

from __future__ import annotations

import numpy as np

from .errors import BoundsError, ChannelError
from .geometry import BoundingBox
from .image import Image


class IntegralImage:
    """(height+1, width+1) table; entry (y, x) sums pixels strictly above-left.

    Row 0 and column 0 are a zero border so rectangle sums need no edge
    special-casing. Immutable after construction.
    """

    __slots__ = ("table",)

    def __init__(self, table: np.ndarray):
        tab = np.ascontiguousarray(table, dtype=np.float64)
        tab.flags.writeable = False
        self.table = tab

    @property
    def width(self) -> int:
        return self.table.shape[1] - 1

    @property
    def height(self) -> int:
        return self.table.shape[0] - 1


def integral(img: Image) -> IntegralImage:
    """Cumulative-sum table of a single-channel image.

    Sums of 8-bit-range pixels stay exact in float64 (integers < 2**53).
    """
    if img.channels != 1:
        raise ChannelError("integral image requires a single-channel image")
    table = np.zeros((img.height + 1, img.width + 1), dtype=np.float64)
    table[1:, 1:] = img.plane().cumsum(axis=0).cumsum(axis=1)
    return IntegralImage(table)


def rect_sum(ii: IntegralImage, box: BoundingBox) -> float:
    """Sum of pixels inside `box` via four table lookups.

    Box coordinates are taken as integer pixel offsets.
    """
    x, y, w, h = int(box.x), int(box.y), int(box.w), int(box.h)
    if x < 0 or y < 0 or w <= 0 or h <= 0 or x + w > ii.width or y + h > ii.height:
        raise BoundsError(
            f"box ({x},{y},{w},{h}) outside {ii.width}x{ii.height} image"
        )
    t = ii.table
    return float(t[y + h, x + w] - t[y, x + w] - t[y + h, x] + t[y, x])
