"""IoU-family bounding-box regression losses with Focaler-IoU interval remapping."""

from .focaler import FocalerEval, FocalerInterval, focaler_iou_loss, focaler_loss, focaler_map, mapping_slope
from .geometry import Box, CornerBox, EncloseInfo, area, center_dist2, enclose_info, intersect_area, iou, union_area
from .gradients import Grad4, GradCheckReport, LossEval, fd_grad, grad_check, loss_grad
from .variants import ALL_KINDS, LossKind, MetricBreakdown, SiouParams, ciou, diou, eiou, giou, loss, metric, siou

__all__ = [
    "ALL_KINDS",
    "Box",
    "CornerBox",
    "EncloseInfo",
    "FocalerEval",
    "FocalerInterval",
    "Grad4",
    "GradCheckReport",
    "LossEval",
    "LossKind",
    "MetricBreakdown",
    "SiouParams",
    "area",
    "center_dist2",
    "ciou",
    "diou",
    "eiou",
    "enclose_info",
    "fd_grad",
    "focaler_iou_loss",
    "focaler_loss",
    "focaler_map",
    "giou",
    "grad_check",
    "intersect_area",
    "iou",
    "loss",
    "loss_grad",
    "mapping_slope",
    "metric",
    "siou",
    "union_area",
]
