import numpy as np
import pytest

from edgesight.image import Image


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_image(arr):
    return Image(np.asarray(arr, dtype=np.float64))


def random_gray(rng, w, h):
    return Image(rng.integers(0, 256, size=(h, w, 1)).astype(np.float64))


def write_pgm(path, arr):
    arr = np.asarray(arr, dtype=np.uint8)
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n" + f"{w} {h}\n255\n".encode() + arr.tobytes())


def write_ppm(path, arr):
    arr = np.asarray(arr, dtype=np.uint8)
    h, w, _ = arr.shape
    with open(path, "wb") as fh:
        fh.write(b"P6\n" + f"{w} {h}\n255\n".encode() + arr.tobytes())
