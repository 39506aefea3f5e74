import random

import pytest

from tsrkit.geometry import BBox, SizeBucket, aspect_ratio, classify_size, iou


def random_box(rng, span=100.0):
    x1 = rng.uniform(-span, span)
    y1 = rng.uniform(-span, span)
    return BBox(x1, y1, x1 + rng.uniform(0.0, span), y1 + rng.uniform(0.0, span))


def test_invalid_box_rejected():
    with pytest.raises(ValueError):
        BBox(3, 0, 1, 5)
    with pytest.raises(ValueError):
        BBox(0, 5, 1, 3)


def test_iou_identity():
    box = BBox(0, 0, 4, 4)
    assert iou(box, box) == 1.0


def test_iou_disjoint():
    assert iou(BBox(0, 0, 1, 1), BBox(5, 5, 6, 6)) == 0.0


def test_iou_partial_overlap():
    # intersection 1, union 4 + 4 - 1 = 7
    assert iou(BBox(0, 0, 2, 2), BBox(1, 1, 3, 3)) == pytest.approx(1.0 / 7.0)


def test_iou_degenerate_zero_area():
    point = BBox(2, 2, 2, 2)
    assert iou(point, point) == 0.0
    assert iou(point, BBox(0, 0, 4, 4)) == 0.0


def test_iou_properties_randomized():
    rng = random.Random(42)
    for _ in range(300):
        a = random_box(rng)
        b = random_box(rng)
        v = iou(a, b)
        assert 0.0 <= v <= 1.0
        assert v == iou(b, a)
        dx, dy = rng.uniform(-50, 50), rng.uniform(-50, 50)
        shifted = iou(a.translate(dx, dy), b.translate(dx, dy))
        assert shifted == pytest.approx(v, abs=1e-9)
        if a.area > 0:
            assert iou(a, a) == 1.0


@pytest.mark.parametrize(
    "box,expected",
    [
        (BBox(0, 0, 10, 10), SizeBucket.SMALL),  # area 100
        (BBox(0, 0, 50, 40), SizeBucket.MEDIUM),  # area 2000
        (BBox(0, 0, 100, 100), SizeBucket.LARGE),  # area 10000
        (BBox(0, 0, 32, 32), SizeBucket.MEDIUM),  # boundary 1024 -> upper bucket
        (BBox(0, 0, 64, 64), SizeBucket.LARGE),  # boundary 4096 -> upper bucket
    ],
)
def test_classify_size(box, expected):
    assert classify_size(box) == expected


def test_classify_size_total_and_exclusive():
    rng = random.Random(7)
    for _ in range(500):
        bucket = classify_size(random_box(rng, span=80.0))
        assert bucket in (SizeBucket.SMALL, SizeBucket.MEDIUM, SizeBucket.LARGE)


@pytest.mark.parametrize(
    "box,expected",
    [
        (BBox(0, 0, 10, 10), 1.0),
        (BBox(0, 0, 100, 25), 0.25),
        (BBox(0, 0, 4, 160), 40.0),
    ],
)
def test_aspect_ratio(box, expected):
    assert aspect_ratio(box) == pytest.approx(expected)


def test_aspect_ratio_zero_width():
    with pytest.raises(ValueError):
        aspect_ratio(BBox(5, 0, 5, 10))
