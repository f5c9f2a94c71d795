"""Multi-scale image pyramids built by nearest-neighbor subsampling.

Level k has sides floor(original / scale_factor**k); pixels are discarded, not
averaged, so a pyramid level is a pure subsample of the original image.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError
from .image import Image, resize_nearest


@dataclass(frozen=True)
class PyramidLevel:
    image: Image
    scale: float  # original width / this level's width, >= 1


def build_pyramid(img: Image, scale_factor: float, min_side: int) -> list[PyramidLevel]:
    """Shrink while the current level's sides are both at least `min_side`.

    Level 0 is always the original image, even when it is already smaller
    than `min_side`; iteration stops once a produced level drops below
    `min_side` on either side (that level is the last). Each level is
    sampled from the original (not from the previous level), so error does
    not accumulate. Duplicate sizes that a scale factor close to 1 can
    produce are skipped, keeping scales strictly increasing.
    """
    if scale_factor <= 1:
        raise ConfigError(f"scale_factor must be > 1, got {scale_factor}")
    if min_side < 8:
        raise ConfigError(f"min_side must be >= 8, got {min_side}")

    levels = [PyramidLevel(img, 1.0)]
    k = 1
    prev = (img.width, img.height)
    while prev[0] >= min_side and prev[1] >= min_side:
        f = scale_factor**k
        w = int(img.width / f)
        h = int(img.height / f)
        if w < 1 or h < 1:
            break
        if (w, h) != prev:
            levels.append(PyramidLevel(resize_nearest(img, w, h), img.width / w))
            prev = (w, h)
        k += 1
    return levels
