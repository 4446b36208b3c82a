"""IoU metric family: IoU, GIoU, DIoU, CIoU, EIoU and SIoU.

Every metric returns a :class:`MetricBreakdown` so the penalty structure
can be inspected; the matching loss is always ``1 - metric``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .geometry import Box, corner_area, center_dist2, enclose_info, intersect_area


class LossKind(str, enum.Enum):
    IOU = "iou"
    GIOU = "giou"
    DIOU = "diou"
    CIOU = "ciou"
    EIOU = "eiou"
    SIOU = "siou"

    @classmethod
    def parse(cls, token: str) -> LossKind:
        try:
            return cls(token)
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown loss {token!r}; expected one of: {valid}") from None

    def __str__(self) -> str:
        return self.value


ALL_KINDS: tuple[LossKind, ...] = tuple(LossKind)


@dataclass(frozen=True)
class SiouParams:
    """Shape-cost exponent and the guard added to the angle-cost denominator."""

    theta: float = 4.0
    eps: float = 1e-7

    def __post_init__(self) -> None:
        if not (self.theta > 0 and math.isfinite(self.theta)):
            raise ValueError(f"theta must be positive, got {self.theta}")
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ValueError(f"eps must be positive, got {self.eps}")


@dataclass(frozen=True)
class MetricBreakdown:
    """A metric value together with the IoU and the named penalty terms.

    ``degenerate`` lists the terms that were suppressed because their
    denominator vanished (zero-area or zero-extent inputs).
    """

    kind: LossKind
    metric: float
    iou: float
    penalty_terms: dict[str, float] = field(default_factory=dict)
    degenerate: tuple[str, ...] = ()

    def reconstruct(self) -> float:
        """Recompose the metric from ``iou`` and the penalty terms."""
        t = self.penalty_terms
        if self.kind is LossKind.IOU:
            return self.iou
        if self.kind is LossKind.GIOU:
            if "enclose" in self.degenerate:
                return 0.0
            return self.iou - t["giou_term"]
        if self.kind is LossKind.DIOU:
            return self.iou - t["dist"]
        if self.kind is LossKind.CIOU:
            return self.iou - t["dist"] - t["aspect"]
        if self.kind is LossKind.EIOU:
            return self.iou - t["dist"] - t["width"] - t["height"]
        return self.iou - (t["delta"] + t["omega"]) / 2


def _safe_ratio(num: float, den: float) -> float | None:
    return num / den if den > 0 else None


def _iou_parts(a: Box, g: Box) -> tuple[float, float]:
    inter = intersect_area(a, g)
    union = corner_area(a) + corner_area(g) - inter
    return (inter / union if union > 0 else 0.0), union


def plain_iou(a: Box, g: Box) -> MetricBreakdown:
    value, _ = _iou_parts(a, g)
    return MetricBreakdown(LossKind.IOU, value, value)


def giou(a: Box, g: Box) -> MetricBreakdown:
    value, union = _iou_parts(a, g)
    c_area = enclose_info(a, g).enclose_area
    if c_area <= 0:
        return MetricBreakdown(LossKind.GIOU, 0.0, value, {"giou_term": 0.0}, ("enclose",))
    term = (c_area - union) / c_area
    return MetricBreakdown(LossKind.GIOU, value - term, value, {"giou_term": term})


def _distance_term(a: Box, g: Box, flags: list[str]) -> float:
    term = _safe_ratio(center_dist2(a, g), enclose_info(a, g).diag2)
    if term is None:
        flags.append("dist")
        return 0.0
    return term


def diou(a: Box, g: Box) -> MetricBreakdown:
    value, _ = _iou_parts(a, g)
    flags: list[str] = []
    dist = _distance_term(a, g, flags)
    return MetricBreakdown(LossKind.DIOU, value - dist, value, {"dist": dist}, tuple(flags))


def aspect_v(a: Box, g: Box) -> float | None:
    """Aspect-ratio consistency term of CIoU, ``None`` for zero-extent boxes."""
    if a.w <= 0 or a.h <= 0 or g.w <= 0 or g.h <= 0:
        return None
    diff = math.atan(g.w / g.h) - math.atan(a.w / a.h)
    return 4.0 / math.pi**2 * diff * diff


def ciou(a: Box, g: Box) -> MetricBreakdown:
    value, _ = _iou_parts(a, g)
    flags: list[str] = []
    dist = _distance_term(a, g, flags)
    v = aspect_v(a, g)
    if v is None:
        flags.append("aspect")
        v = 0.0
    # alpha -> 0 together with v, which also covers the 0/0 at iou == 1
    alpha = v / ((1.0 - value) + v) if v > 0 else 0.0
    aspect = alpha * v
    terms = {"dist": dist, "v": v, "alpha": alpha, "aspect": aspect}
    return MetricBreakdown(LossKind.CIOU, value - dist - aspect, value, terms, tuple(flags))


def eiou(a: Box, g: Box) -> MetricBreakdown:
    value, _ = _iou_parts(a, g)
    flags: list[str] = []
    dist = _distance_term(a, g, flags)
    enc = enclose_info(a, g)
    width = _safe_ratio((a.w - g.w) ** 2, enc.wc**2)
    if width is None:
        flags.append("width")
        width = 0.0
    height = _safe_ratio((a.h - g.h) ** 2, enc.hc**2)
    if height is None:
        flags.append("height")
        height = 0.0
    terms = {"dist": dist, "width": width, "height": height}
    return MetricBreakdown(
        LossKind.EIOU, value - dist - width - height, value, terms, tuple(flags)
    )


def siou(a: Box, g: Box, p: SiouParams | None = None) -> MetricBreakdown:
    p = p or SiouParams()
    value, _ = _iou_parts(a, g)
    enc = enclose_info(a, g)
    flags: list[str] = []

    dx = g.cx - a.cx
    dy = g.cy - a.cy
    sigma = math.sqrt(dx * dx + dy * dy)
    sin_alpha = min(abs(dx), abs(dy)) / (sigma + p.eps)
    angle = math.sin(2.0 * math.asin(sin_alpha))
    gamma = 2.0 - angle

    rho_x = _safe_ratio(dx, enc.wc)
    rho_y = _safe_ratio(dy, enc.hc)
    if rho_x is None or rho_y is None:
        flags.append("delta")
    rho_x = 0.0 if rho_x is None else rho_x * rho_x
    rho_y = 0.0 if rho_y is None else rho_y * rho_y
    delta = (1.0 - math.exp(-gamma * rho_x)) + (1.0 - math.exp(-gamma * rho_y))

    omega_w = _safe_ratio(abs(a.w - g.w), max(a.w, g.w))
    omega_h = _safe_ratio(abs(a.h - g.h), max(a.h, g.h))
    if omega_w is None:
        flags.append("omega_w")
        omega_w = 0.0
    if omega_h is None:
        flags.append("omega_h")
        omega_h = 0.0
    omega = (1.0 - math.exp(-omega_w)) ** p.theta + (1.0 - math.exp(-omega_h)) ** p.theta

    terms = {
        "angle": angle,
        "gamma": gamma,
        "rho_x": rho_x,
        "rho_y": rho_y,
        "delta": delta,
        "omega_w": omega_w,
        "omega_h": omega_h,
        "omega": omega,
    }
    return MetricBreakdown(
        LossKind.SIOU, value - (delta + omega) / 2, value, terms, tuple(flags)
    )


def metric(
    kind: LossKind | str, a: Box, g: Box, p: SiouParams | None = None
) -> MetricBreakdown:
    kind = LossKind.parse(kind)
    if kind is LossKind.IOU:
        return plain_iou(a, g)
    if kind is LossKind.GIOU:
        return giou(a, g)
    if kind is LossKind.DIOU:
        return diou(a, g)
    if kind is LossKind.CIOU:
        return ciou(a, g)
    if kind is LossKind.EIOU:
        return eiou(a, g)
    return siou(a, g, p)


def loss(kind: LossKind | str, a: Box, g: Box, p: SiouParams | None = None) -> float:
    return 1.0 - metric(kind, a, g, p).metric
