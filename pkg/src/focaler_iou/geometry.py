"""Axis-aligned box arithmetic.

Boxes are stored in center-size form ``(cx, cy, w, h)``; :class:`CornerBox`
is the ``(x1, y1, x2, y2)`` interchange form used by the file formats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


def _coerce(obj, names: tuple[str, ...]) -> None:
    for name in names:
        v = float(getattr(obj, name))
        if not math.isfinite(v):
            raise ValueError(f"box coordinates must be finite, got {name}={v!r}")
        object.__setattr__(obj, name, v)


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle given by its center and extents."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self) -> None:
        _coerce(self, ("cx", "cy", "w", "h"))
        if self.w < 0 or self.h < 0:
            raise ValueError(f"box extents must be non-negative, got w={self.w}, h={self.h}")

    @property
    def x1(self) -> float:
        return self.cx - self.w / 2

    @property
    def y1(self) -> float:
        return self.cy - self.h / 2

    @property
    def x2(self) -> float:
        return self.cx + self.w / 2

    @property
    def y2(self) -> float:
        return self.cy + self.h / 2

    @classmethod
    def from_corners(cls, x1: float, y1: float, x2: float, y2: float) -> Box:
        CornerBox(x1, y1, x2, y2)  # validates ordering
        return cls((x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1)

    def to_corners(self) -> CornerBox:
        return CornerBox(self.x1, self.y1, self.x2, self.y2)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.cx, self.cy, self.w, self.h)

    def translated(self, tx: float, ty: float) -> Box:
        return Box(self.cx + tx, self.cy + ty, self.w, self.h)

    def scaled(self, s: float) -> Box:
        """Scale about the origin by ``s > 0``."""
        if not s > 0:
            raise ValueError("scale must be positive")
        return Box(self.cx * s, self.cy * s, self.w * s, self.h * s)


@dataclass(frozen=True)
class CornerBox:
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        _coerce(self, ("x1", "y1", "x2", "y2"))
        if self.x1 > self.x2 or self.y1 > self.y2:
            raise ValueError(
                f"corners out of order: ({self.x1}, {self.y1}, {self.x2}, {self.y2})"
            )

    def to_box(self) -> Box:
        return Box.from_corners(self.x1, self.y1, self.x2, self.y2)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class EncloseInfo:
    """Minimum enclosing box of two boxes with its derived sizes."""

    enclose: Box
    enclose_area: float
    diag2: float
    wc: float
    hc: float
    corners: CornerBox  # exact hull; ``enclose`` may differ from it in the last ulp


def area(b: Box) -> float:
    return b.w * b.h


def _overlap(a1: float, a2: float, b1: float, b2: float) -> float:
    return max(0.0, min(a2, b2) - max(a1, b1))


def intersect_area(a: Box, b: Box) -> float:
    return _overlap(a.x1, a.x2, b.x1, b.x2) * _overlap(a.y1, a.y2, b.y1, b.y2)


def union_area(a: Box, b: Box) -> float:
    return area(a) + area(b) - intersect_area(a, b)


def corner_area(b: Box) -> float:
    # same rounding as the overlap extents, so iou(a, a) == 1 exactly
    return (b.x2 - b.x1) * (b.y2 - b.y1)


def iou(a: Box, b: Box) -> float:
    """Intersection over union, 0 when both boxes have zero area."""
    inter = intersect_area(a, b)
    union = corner_area(a) + corner_area(b) - inter
    if union <= 0:
        return 0.0
    return inter / union


def enclose_info(a: Box, b: Box) -> EncloseInfo:
    x1 = min(a.x1, b.x1)
    y1 = min(a.y1, b.y1)
    x2 = max(a.x2, b.x2)
    y2 = max(a.y2, b.y2)
    wc = x2 - x1
    hc = y2 - y1
    return EncloseInfo(
        enclose=Box((x1 + x2) / 2, (y1 + y2) / 2, wc, hc),
        enclose_area=wc * hc,
        diag2=wc * wc + hc * hc,
        wc=wc,
        hc=hc,
        corners=CornerBox(x1, y1, x2, y2),
    )


def center_dist2(a: Box, b: Box) -> float:
    dx = a.cx - b.cx
    dy = a.cy - b.cy
    return dx * dx + dy * dy
