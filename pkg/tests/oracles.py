"""Independent oracles used by the tests.

Nothing here imports the package's metric code: boxes are plain corner
tuples ``(x1, y1, x2, y2)`` and every formula is written out again from
its definition.
"""

from __future__ import annotations

import math

import numpy as np


def raster_areas(a, b, lo=0.0, hi=4.0, n=2000):
    """(intersection, union) by counting cell centers of an n x n grid."""
    c = lo + (np.arange(n) + 0.5) * (hi - lo) / n
    x, y = np.meshgrid(c, c, indexing="ij")

    def inside(box):
        x1, y1, x2, y2 = box
        return (x >= x1) & (x <= x2) & (y >= y1) & (y <= y2)

    ia, ib = inside(a), inside(b)
    cell = ((hi - lo) / n) ** 2
    return float((ia & ib).sum() * cell), float((ia | ib).sum() * cell)


def iou_monte_carlo(a, b, n_samples, rng):
    """IoU from uniform samples over the enclosing box."""
    ex1, ey1 = min(a[0], b[0]), min(a[1], b[1])
    ex2, ey2 = max(a[2], b[2]), max(a[3], b[3])
    x = rng.uniform(ex1, ex2, n_samples)
    y = rng.uniform(ey1, ey2, n_samples)
    in_a = (x >= a[0]) & (x <= a[2]) & (y >= a[1]) & (y <= a[3])
    in_b = (x >= b[0]) & (x <= b[2]) & (y >= b[1]) & (y <= b[3])
    union = np.count_nonzero(in_a | in_b)
    if union == 0:
        return 0.0
    return np.count_nonzero(in_a & in_b) / union


def _parts(B, G):
    """Areas of B ∩ G and B ∪ G plus the enclosing-box C corners."""
    inter_w = min(B[2], G[2]) - max(B[0], G[0])
    inter_h = min(B[3], G[3]) - max(B[1], G[1])
    inter = inter_w * inter_h if inter_w > 0 and inter_h > 0 else 0.0
    area_b = (B[2] - B[0]) * (B[3] - B[1])
    area_g = (G[2] - G[0]) * (G[3] - G[1])
    union = area_b + area_g - inter
    C = (min(B[0], G[0]), min(B[1], G[1]), max(B[2], G[2]), max(B[3], G[3]))
    return inter, union, C


def IoU(B, G):
    inter, union, _ = _parts(B, G)
    return inter / union if union > 0 else 0.0


def GIoU(B, G):
    _, union, C = _parts(B, G)
    area_C = (C[2] - C[0]) * (C[3] - C[1])
    return IoU(B, G) - (area_C - union) / area_C


def _centers(B):
    return (B[0] + B[2]) / 2, (B[1] + B[3]) / 2


def DIoU(B, G):
    _, _, C = _parts(B, G)
    b, b_gt = _centers(B), _centers(G)
    rho2 = (b[0] - b_gt[0]) ** 2 + (b[1] - b_gt[1]) ** 2
    c2 = (C[2] - C[0]) ** 2 + (C[3] - C[1]) ** 2
    return IoU(B, G) - rho2 / c2


def v_term(B, G):
    w, h = B[2] - B[0], B[3] - B[1]
    w_gt, h_gt = G[2] - G[0], G[3] - G[1]
    return 4 / math.pi**2 * (math.atan(w_gt / h_gt) - math.atan(w / h)) ** 2


def CIoU(B, G):
    v = v_term(B, G)
    iou = IoU(B, G)
    alpha = v / ((1 - iou) + v) if v != 0 else 0.0
    return DIoU(B, G) - alpha * v


def EIoU(B, G):
    _, _, C = _parts(B, G)
    w_c, h_c = C[2] - C[0], C[3] - C[1]
    w, h = B[2] - B[0], B[3] - B[1]
    w_gt, h_gt = G[2] - G[0], G[3] - G[1]
    return DIoU(B, G) - (w - w_gt) ** 2 / w_c**2 - (h - h_gt) ** 2 / h_c**2


def SIoU_terms(B, G, theta=4.0, eps=1e-7):
    _, _, C = _parts(B, G)
    w_c, h_c = C[2] - C[0], C[3] - C[1]
    x_c, y_c = _centers(B)
    x_c_gt, y_c_gt = _centers(G)
    w, h = B[2] - B[0], B[3] - B[1]
    w_gt, h_gt = G[2] - G[0], G[3] - G[1]
    Lambda = math.sin(
        2
        * math.asin(
            min(abs(x_c_gt - x_c), abs(y_c_gt - y_c))
            / (math.sqrt((x_c_gt - x_c) ** 2 + (y_c_gt - y_c) ** 2) + eps)
        )
    )
    gamma = 2 - Lambda
    rho_x = ((x_c - x_c_gt) / w_c) ** 2
    rho_y = ((y_c - y_c_gt) / h_c) ** 2
    Delta = (1 - math.exp(-gamma * rho_x)) + (1 - math.exp(-gamma * rho_y))
    omega_w = abs(w - w_gt) / max(w, w_gt)
    omega_h = abs(h - h_gt) / max(h, h_gt)
    Omega = (1 - math.exp(-omega_w)) ** theta + (1 - math.exp(-omega_h)) ** theta
    return {
        "Lambda": Lambda,
        "gamma": gamma,
        "Delta": Delta,
        "Omega": Omega,
        "SIoU": IoU(B, G) - (Delta + Omega) / 2,
    }


def SIoU(B, G, theta=4.0, eps=1e-7):
    return SIoU_terms(B, G, theta, eps)["SIoU"]


ORACLES = {"iou": IoU, "giou": GIoU, "diou": DIoU, "ciou": CIoU, "eiou": EIoU, "siou": SIoU}


def focaler(iou, d, u):
    if iou < d:
        return 0.0
    if iou > u:
        return 1.0
    return (iou - d) / (u - d)
