"""Linear interval remapping of IoU and the composed Focaler losses.

The mapping sends IoU values below ``d`` to 0, above ``u`` to 1 and
interpolates linearly in between. Composed losses swap only the IoU term:
``L_focaler = L_X + IoU - IoU_focaler``; penalty terms are left untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Box
from .variants import LossKind, SiouParams, metric


@dataclass(frozen=True)
class FocalerInterval:
    d: float = 0.0
    u: float = 1.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.d) and math.isfinite(self.u)):
            raise ValueError("interval bounds must be finite")
        if not (0.0 <= self.d < self.u <= 1.0):
            raise ValueError(f"need 0 <= d < u <= 1, got d={self.d}, u={self.u}")

    @property
    def slope(self) -> float:
        return 1.0 / (self.u - self.d)


@dataclass(frozen=True)
class FocalerEval:
    kind: LossKind
    iou: float
    iou_focaler: float
    base_loss: float
    focaler_loss: float
    degenerate: tuple[str, ...] = ()


def _check_iou(iou: float) -> None:
    if not (math.isfinite(iou) and 0.0 <= iou <= 1.0):
        raise ValueError(f"IoU must lie in [0, 1], got {iou!r}")


def focaler_map(iou: float, iv: FocalerInterval) -> float:
    _check_iou(iou)
    if iou < iv.d:
        return 0.0
    if iou > iv.u:
        return 1.0
    return (iou - iv.d) / (iv.u - iv.d)


def focaler_iou_loss(iou: float, iv: FocalerInterval) -> float:
    return 1.0 - focaler_map(iou, iv)


def mapping_slope(iou: float, iv: FocalerInterval) -> float:
    """Derivative of :func:`focaler_map`.

    At the kinks ``iou == d`` and ``iou == u`` the interior value
    ``1 / (u - d)`` is returned.
    """
    _check_iou(iou)
    if iv.d <= iou <= iv.u:
        return iv.slope
    return 0.0


def focaler_loss(
    kind: LossKind | str,
    a: Box,
    g: Box,
    iv: FocalerInterval,
    p: SiouParams | None = None,
) -> FocalerEval:
    br = metric(kind, a, g, p)
    base = 1.0 - br.metric
    mapped = focaler_map(br.iou, iv)
    return FocalerEval(
        kind=br.kind,
        iou=br.iou,
        iou_focaler=mapped,
        base_loss=base,
        focaler_loss=base + (br.iou - mapped),
        degenerate=br.degenerate,
    )
