"""Axis-aligned box geometry for photo verification.

Boxes are continuous regions in pixel coordinates: (x, y) is the top-left
corner, y grows downward. All metrics treat boxes as real-valued areas,
not pixel grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class BoxOutOfBounds(ValueError):
    """Raised when a box does not fit inside the resolution it is scaled from."""


@dataclass(frozen=True)
class BoundingBox:
    """Rectangle with strictly positive size and non-negative position."""

    x: float
    y: float
    width: float
    height: float

    def __post_init__(self):
        for v in (self.x, self.y, self.width, self.height):
            if not math.isfinite(v):
                raise ValueError(f"box coordinates must be finite, got {v!r}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"box position must be non-negative, got ({self.x}, {self.y})")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"box size must be positive, got {self.width}x{self.height}")

    @property
    def right(self) -> float:
        return self.x + self.width

    @property
    def bottom(self) -> float:
        return self.y + self.height

    def contains(self, other: "BoundingBox") -> bool:
        """True when `other` lies entirely inside this box."""
        return (
            other.x >= self.x
            and other.y >= self.y
            and other.right <= self.right
            and other.bottom <= self.bottom
        )


@dataclass(frozen=True)
class Resolution:
    """Image size in whole pixels."""

    width: int
    height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"resolution must be positive, got {self.width}x{self.height}")

    def bounds(self) -> BoundingBox:
        return BoundingBox(0, 0, float(self.width), float(self.height))


def area(box: BoundingBox) -> float:
    """Area of a box in square pixels."""
    return box.width * box.height


def intersection_area(a: BoundingBox, b: BoundingBox) -> float:
    """Area of the overlap between two boxes, 0.0 when disjoint."""
    dx = min(a.right, b.right) - max(a.x, b.x)
    dy = min(a.bottom, b.bottom) - max(a.y, b.y)
    if dx <= 0 or dy <= 0:
        return 0.0
    return dx * dy


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes.

    Symmetric, in [0, 1]. Used to judge whether a predicted address-bar
    box matches the ground-truth one.
    """
    inter = intersection_area(a, b)
    union = area(a) + area(b) - inter
    if union <= 0:
        return 0.0
    return min(inter / union, 1.0)


def cover_rate(text_box: BoundingBox, addrbar_box: BoundingBox) -> float:
    """Fraction of the text box that lies inside the address-bar box.

    Normalized by the text box area only, so the metric is asymmetric:
    a small text fully inside a large bar scores 1.0 while the reverse
    does not. In [0, 1]; the overlap is recomputed from box edges, so the
    ratio is clamped against one-ulp float spill past 1.0.
    """
    return min(intersection_area(text_box, addrbar_box) / area(text_box), 1.0)


def rescale_box(box: BoundingBox, src: Resolution, dst: Resolution) -> BoundingBox:
    """Map a box from one resolution into another.

    Applies a single uniform scale factor min(dst.w/src.w, dst.h/src.h)
    to both axes so aspect ratio is preserved.

    Raises:
        BoxOutOfBounds: the box does not fit inside `src`.
    """
    eps = 1e-9
    if box.right > src.width + eps or box.bottom > src.height + eps:
        raise BoxOutOfBounds(
            f"box ({box.x}, {box.y}, {box.width}, {box.height}) exceeds {src.width}x{src.height}"
        )
    scale = min(dst.width / src.width, dst.height / src.height)
    return BoundingBox(box.x * scale, box.y * scale, box.width * scale, box.height * scale)
