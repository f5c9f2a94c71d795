"""Image container plus binary PGM/PPM I/O, grayscale conversion and resizing.

Pixels are stored as float64 in a read-only (height, width, channels) array
with intensities in [0, 255]. Channels is 1 (gray) or 3 (RGB).
"""

from __future__ import annotations

import numpy as np

from .errors import ChannelError, FormatError, InputError

# ITU-R BT.601 luma weights.
GRAY_WEIGHTS = (0.299, 0.587, 0.114)

_WHITESPACE = b" \t\r\n\x0b\x0c"


class Image:
    """Dense raster of intensities in [0, 255]; immutable after construction."""

    __slots__ = ("pixels",)

    def __init__(self, pixels):
        arr = np.asarray(pixels, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise InputError(f"expected 2-D or 3-D pixel array, got ndim={arr.ndim}")
        h, w, c = arr.shape
        if h < 1 or w < 1:
            raise InputError(f"image must be at least 1x1, got {w}x{h}")
        if c not in (1, 3):
            raise ChannelError(f"unsupported channel count {c}")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        self.pixels = arr

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    def plane(self) -> np.ndarray:
        """2-D (height, width) view of a single-channel image."""
        if self.channels != 1:
            raise ChannelError("plane() requires a single-channel image")
        return self.pixels[:, :, 0]

    def __repr__(self):
        return f"Image({self.width}x{self.height}, channels={self.channels})"


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Next header token, skipping whitespace and '#' comments."""
    n = len(data)
    while pos < n:
        ch = data[pos]
        if ch in _WHITESPACE:
            pos += 1
        elif ch == 0x23:  # '#'
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos] not in _WHITESPACE:
        pos += 1
    if start == pos:
        raise FormatError("unexpected end of header")
    return data[start:pos], pos


def _header_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    token, pos = _next_token(data, pos)
    try:
        value = int(token)
    except ValueError:
        raise FormatError(f"invalid {what} field: {token!r}") from None
    return value, pos


def load_image(path) -> Image:
    """Load a binary PGM (P5) or PPM (P6) file.

    Raises FormatError on malformed headers or truncated payloads.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 2:
        raise FormatError("file too short for a PGM/PPM header")
    magic = data[:2]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise FormatError(f"unsupported magic {magic!r}; expected P5 or P6")

    pos = 2
    width, pos = _header_int(data, pos, "width")
    height, pos = _header_int(data, pos, "height")
    maxval, pos = _header_int(data, pos, "maxval")
    if width < 1 or height < 1:
        raise FormatError(f"invalid dimensions {width}x{height}")
    if not 0 < maxval < 256:
        raise FormatError(f"unsupported maxval {maxval}; one byte per sample required")
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise FormatError("missing whitespace after maxval")
    pos += 1

    expected = width * height * channels
    payload = data[pos : pos + expected]
    if len(payload) < expected:
        raise FormatError(
            f"truncated payload: expected {expected} bytes, got {len(payload)}"
        )
    arr = np.frombuffer(payload, dtype=np.uint8).astype(np.float64)
    return Image(arr.reshape(height, width, channels))


def save_image(img: Image, path) -> None:
    """Write a binary PGM (1 channel) or PPM (3 channels), maxval 255."""
    magic = b"P5" if img.channels == 1 else b"P6"
    payload = np.clip(np.rint(img.pixels), 0, 255).astype(np.uint8).tobytes()
    with open(path, "wb") as fh:
        fh.write(magic + b"\n")
        fh.write(f"{img.width} {img.height}\n255\n".encode("ascii"))
        fh.write(payload)


def to_grayscale(img: Image) -> Image:
    """Single-channel image via BT.601 weights; gray input is returned as-is."""
    if img.channels == 1:
        return img
    r, g, b = GRAY_WEIGHTS
    gray = r * img.pixels[:, :, 0] + g * img.pixels[:, :, 1] + b * img.pixels[:, :, 2]
    return Image(gray)


def resize_nearest(img: Image, new_w: int, new_h: int) -> Image:
    """Nearest-neighbor resampling (no anti-alias filter)."""
    if new_w < 1 or new_h < 1:
        raise InputError(f"target size must be positive, got {new_w}x{new_h}")
    rows = (np.arange(new_h) * (img.height / new_h)).astype(int)
    cols = (np.arange(new_w) * (img.width / new_w)).astype(int)
    return Image(img.pixels[rows[:, np.newaxis], cols, :])


def draw_boxes(img: Image, boxes, intensity=255.0) -> Image:
    """Copy of the image with 1-px box outlines burned in.

    For RGB images only the first channel takes `intensity`; the other two are
    zeroed on the outline, which reads as red.
    """
    arr = img.pixels.copy()
    h, w = img.height, img.width
    for box in boxes:
        x0 = int(max(0, min(w - 1, round(box.x))))
        y0 = int(max(0, min(h - 1, round(box.y))))
        x1 = int(max(0, min(w - 1, round(box.x + box.w - 1))))
        y1 = int(max(0, min(h - 1, round(box.y + box.h - 1))))
        if img.channels == 1:
            arr[y0, x0 : x1 + 1, 0] = intensity
            arr[y1, x0 : x1 + 1, 0] = intensity
            arr[y0 : y1 + 1, x0, 0] = intensity
            arr[y0 : y1 + 1, x1, 0] = intensity
        else:
            for (yy, xx) in ((slice(y0, y0 + 1), slice(x0, x1 + 1)),
                             (slice(y1, y1 + 1), slice(x0, x1 + 1)),
                             (slice(y0, y1 + 1), slice(x0, x0 + 1)),
                             (slice(y0, y1 + 1), slice(x1, x1 + 1))):
                arr[yy, xx, 0] = intensity
                arr[yy, xx, 1] = 0.0
                arr[yy, xx, 2] = 0.0
    return Image(arr)
