"""Axis-aligned box arithmetic: IoU, areas, and object-size buckets.

Boxes are (x1, y1, x2, y2) in pixel coordinates with the origin at the
top-left corner. Coordinates are continuous reals; annotations carry
fractional pixels.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

SMALL_AREA_LIMIT = 32.0 * 32.0
MEDIUM_AREA_LIMIT = 64.0 * 64.0


class SizeBucket(enum.Enum):
    SMALL = "small"
    MEDIUM = "medium"
    LARGE = "large"


@dataclass(frozen=True)
class BBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if not (self.x2 >= self.x1 and self.y2 >= self.y1):
            raise ValueError(f"invalid box: {(self.x1, self.y1, self.x2, self.y2)}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x1 + self.x2), 0.5 * (self.y1 + self.y2))

    def contains_point(self, x: float, y: float) -> bool:
        return self.x1 <= x <= self.x2 and self.y1 <= y <= self.y2

    def translate(self, dx: float, dy: float) -> "BBox":
        return BBox(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)

    def inflate(self, margin: float) -> "BBox":
        """Grow (or shrink, for negative margin) by ``margin`` px on every side."""
        box = BBox(
            self.x1 - margin, self.y1 - margin, self.x2 + margin, self.y2 + margin
        )
        return box

    def intersect(self, other: "BBox") -> "BBox | None":
        """Intersection box, or None when the boxes do not overlap."""
        x1 = max(self.x1, other.x1)
        y1 = max(self.y1, other.y1)
        x2 = min(self.x2, other.x2)
        y2 = min(self.y2, other.y2)
        if x2 < x1 or y2 < y1:
            return None
        return BBox(x1, y1, x2, y2)

    def union_box(self, other: "BBox") -> "BBox":
        """Smallest box enclosing both operands."""
        return BBox(
            min(self.x1, other.x1),
            min(self.y1, other.y1),
            max(self.x2, other.x2),
            max(self.y2, other.y2),
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


def intersection_area(a: BBox, b: BBox) -> float:
    w = min(a.x2, b.x2) - max(a.x1, b.x1)
    h = min(a.y2, b.y2) - max(a.y1, b.y1)
    if w <= 0.0 or h <= 0.0:
        return 0.0
    return w * h


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes.

    Degenerate pairs with zero union area score 0: identical zero-area boxes
    carry no structure, so 0/0 is resolved downward.
    """
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def classify_size(b: BBox) -> SizeBucket:
    """Bucket by area: small < 32^2 <= medium < 64^2 <= large.

    Both boundary areas land in the upper bucket so the buckets partition
    all valid boxes.
    """
    area = b.area
    if area < SMALL_AREA_LIMIT:
        return SizeBucket.SMALL
    if area < MEDIUM_AREA_LIMIT:
        return SizeBucket.MEDIUM
    return SizeBucket.LARGE


def aspect_ratio(b: BBox) -> float:
    """Height over width; zero-width boxes have no defined ratio."""
    if b.width <= 0.0:
        raise ValueError(f"aspect ratio undefined for zero-width box {b.as_tuple()}")
    return b.height / b.width
