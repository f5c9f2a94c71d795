import numpy as np
import pytest

from edgesight.errors import BoundsError, ChannelError
from edgesight.geometry import BoundingBox
from edgesight.image import Image
from edgesight.integral import integral, rect_sum

from conftest import make_image, random_gray
from oracles import rect_sum_oracle


def test_all_ones_bottom_right_counts_pixels():
    ii = integral(make_image(np.ones((2, 2, 1))))
    assert ii.table[2, 2] == 4.0


def test_origin_entry_is_zero(rng):
    ii = integral(random_gray(rng, 5, 4))
    assert ii.table[0, 0] == 0.0
    assert np.all(ii.table[0, :] == 0.0)
    assert np.all(ii.table[:, 0] == 0.0)


def test_entries_match_brute_force(rng):
    img = random_gray(rng, 8, 8)
    ii = integral(img)
    p = img.plane().tolist()
    for y in range(9):
        for x in range(9):
            expect = rect_sum_oracle(p, 0, 0, x, y) if x and y else 0.0
            assert ii.table[y, x] == expect


def test_entries_nondecreasing(rng):
    ii = integral(random_gray(rng, 10, 7))
    assert np.all(np.diff(ii.table, axis=0) >= 0)
    assert np.all(np.diff(ii.table, axis=1) >= 0)


def test_multichannel_rejected(rng):
    img = Image(rng.integers(0, 255, size=(4, 4, 3)).astype(float))
    with pytest.raises(ChannelError):
        integral(img)


def test_rect_sum_uniform_value():
    ii = integral(make_image(np.full((6, 6, 1), 3.0)))
    assert rect_sum(ii, BoundingBox(1, 2, 4, 3)) == 3.0 * 4 * 3


def test_rect_sum_single_pixel(rng):
    img = random_gray(rng, 5, 5)
    ii = integral(img)
    for y in range(5):
        for x in range(5):
            assert rect_sum(ii, BoundingBox(x, y, 1, 1)) == img.plane()[y, x]


def test_rect_sum_random_boxes_exact(rng):
    img = random_gray(rng, 16, 16)
    ii = integral(img)
    p = img.plane().tolist()
    for _ in range(100):
        w = int(rng.integers(1, 17))
        h = int(rng.integers(1, 17))
        x = int(rng.integers(0, 17 - w))
        y = int(rng.integers(0, 17 - h))
        assert rect_sum(ii, BoundingBox(x, y, w, h)) == \
            rect_sum_oracle(p, x, y, w, h)


@pytest.mark.parametrize("box", [
    BoundingBox(-1, 0, 2, 2),
    BoundingBox(0, 0, 9, 1),
    BoundingBox(7, 7, 2, 2),
])
def test_rect_sum_out_of_bounds(rng, box):
    ii = integral(random_gray(rng, 8, 8))
    with pytest.raises(BoundsError):
        rect_sum(ii, box)
