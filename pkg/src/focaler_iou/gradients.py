"""Analytic gradients of every loss with respect to the anchor box.

The kernel works on batches: anchors and targets are ``(N, 4)`` arrays in
``(cx, cy, w, h)`` form and every intermediate carries its value together
with an ``(N, 4)`` gradient, propagated by the chain rule.

Tie convention: where a min/max/abs switches branch exactly at the
evaluation point, the derivative is the mean of the two one-sided
derivatives (``sign(0) = 0`` for abs). With this choice every loss has a
zero gradient at ``anchor == target``. The Focaler mapping uses the
interior slope at ``iou == d`` and ``iou == u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .focaler import FocalerInterval, focaler_loss
from .geometry import Box
from .variants import ALL_KINDS, LossKind, SiouParams, loss as plain_loss

_DX1 = np.array([1.0, 0.0, -0.5, 0.0])
_DX2 = np.array([1.0, 0.0, 0.5, 0.0])
_DY1 = np.array([0.0, 1.0, 0.0, -0.5])
_DY2 = np.array([0.0, 1.0, 0.0, 0.5])
_E = np.eye(4)

# gradients smaller than this are compared on an absolute scale
GRAD_SCALE_FLOOR = 1e-3


@dataclass(frozen=True)
class Grad4:
    d_cx: float
    d_cy: float
    d_w: float
    d_h: float

    def as_array(self) -> np.ndarray:
        return np.array([self.d_cx, self.d_cy, self.d_w, self.d_h])

    @classmethod
    def from_array(cls, g: np.ndarray) -> Grad4:
        return cls(float(g[0]), float(g[1]), float(g[2]), float(g[3]))


@dataclass(frozen=True)
class LossEval:
    """Loss value and gradient; ``nonsmooth`` marks evaluation on a kink."""

    loss: float
    grad: Grad4
    iou: float
    nonsmooth: bool = False


@dataclass(frozen=True)
class BatchEval:
    loss: np.ndarray
    grad: np.ndarray
    iou: np.ndarray
    iou_grad: np.ndarray
    nonsmooth: np.ndarray


def _w_max(a: np.ndarray, b) -> np.ndarray:
    """Weight of ``a`` in ``max(a, b)``."""
    return np.where(a > b, 1.0, np.where(a < b, 0.0, 0.5))


def _w_min(a: np.ndarray, b) -> np.ndarray:
    """Weight of ``a`` in ``min(a, b)``."""
    return np.where(a < b, 1.0, np.where(a > b, 0.0, 0.5))


def _div(num, den):
    """Elementwise ``num / den`` with 0 where ``den == 0``."""
    safe = np.where(den != 0, den, 1.0)
    return np.where(den != 0, num / safe, 0.0)


def _col(x: np.ndarray) -> np.ndarray:
    return x[:, None]


def evaluate_batch(
    kind: LossKind | str,
    anchors: np.ndarray,
    targets: np.ndarray,
    iv: FocalerInterval | None = None,
    p: SiouParams | None = None,
) -> BatchEval:
    """Loss, gradient and IoU for ``N`` anchor/target pairs at once."""
    kind = LossKind.parse(kind)
    p = p or SiouParams()
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    cx, cy, w, h = anchors.T
    gcx, gcy, gw, gh = targets.T

    x1, x2 = cx - w / 2, cx + w / 2
    y1, y2 = cy - h / 2, cy + h / 2
    gx1, gx2 = gcx - gw / 2, gcx + gw / 2
    gy1, gy2 = gcy - gh / 2, gcy + gh / 2

    nonsmooth = np.zeros(len(cx), dtype=bool)
    for a_edge, b_edge in (
        (x1, gx1), (x1, gx2), (x2, gx1), (x2, gx2),
        (y1, gy1), (y1, gy2), (y2, gy1), (y2, gy2),
    ):
        nonsmooth |= a_edge == b_edge

    # intersection
    ix1 = np.maximum(x1, gx1)
    ix2 = np.minimum(x2, gx2)
    iy1 = np.maximum(y1, gy1)
    iy2 = np.minimum(y2, gy2)
    d_ix1 = _col(_w_max(x1, gx1)) * _DX1
    d_ix2 = _col(_w_min(x2, gx2)) * _DX2
    d_iy1 = _col(_w_max(y1, gy1)) * _DY1
    d_iy2 = _col(_w_min(y2, gy2)) * _DY2
    iw_raw = ix2 - ix1
    ih_raw = iy2 - iy1
    iw = np.maximum(iw_raw, 0.0)
    ih = np.maximum(ih_raw, 0.0)
    d_iw = _col(_w_max(iw_raw, 0.0)) * (d_ix2 - d_ix1)
    d_ih = _col(_w_max(ih_raw, 0.0)) * (d_iy2 - d_iy1)
    inter = iw * ih
    d_inter = _col(iw) * d_ih + _col(ih) * d_iw

    aw, ah = x2 - x1, y2 - y1
    d_area = np.zeros_like(anchors)
    d_area[:, 2] = ah
    d_area[:, 3] = aw
    union = aw * ah + (gx2 - gx1) * (gy2 - gy1) - inter
    d_union = d_area - d_inter
    iou = _div(inter, union)
    d_iou = _div(d_inter * _col(union) - _col(inter) * d_union, _col(union) ** 2)

    metric = iou
    d_metric = d_iou

    if kind is not LossKind.IOU:
        ex1 = np.minimum(x1, gx1)
        ex2 = np.maximum(x2, gx2)
        ey1 = np.minimum(y1, gy1)
        ey2 = np.maximum(y2, gy2)
        wc = ex2 - ex1
        hc = ey2 - ey1
        d_wc = _col(_w_max(x2, gx2)) * _DX2 - _col(_w_min(x1, gx1)) * _DX1
        d_hc = _col(_w_max(y2, gy2)) * _DY2 - _col(_w_min(y1, gy1)) * _DY1

    if kind is LossKind.GIOU:
        c_area = wc * hc
        d_c = _col(wc) * d_hc + _col(hc) * d_wc
        # iou - (C - U) / C == iou - 1 + U / C
        term = _div(c_area - union, c_area)
        d_term = -_div(d_union * _col(c_area) - _col(union) * d_c, _col(c_area) ** 2)
        degenerate = c_area <= 0
        metric = np.where(degenerate, 0.0, iou - term)
        d_metric = np.where(_col(degenerate), 0.0, d_iou - d_term)

    elif kind in (LossKind.DIOU, LossKind.CIOU, LossKind.EIOU):
        dx = cx - gcx
        dy = cy - gcy
        rho2 = dx * dx + dy * dy
        d_rho2 = _col(2 * dx) * _E[0] + _col(2 * dy) * _E[1]
        diag2 = wc * wc + hc * hc
        d_diag2 = _col(2 * wc) * d_wc + _col(2 * hc) * d_hc
        dist = _div(rho2, diag2)
        d_dist = _div(d_rho2 * _col(diag2) - _col(rho2) * d_diag2, _col(diag2) ** 2)
        metric = iou - dist
        d_metric = d_iou - d_dist

        if kind is LossKind.CIOU:
            ok = (w > 0) & (h > 0) & (gw > 0) & (gh > 0)
            k = 4.0 / math.pi**2
            t = np.arctan(_div(gw, gh)) - np.arctan(_div(w, h))
            r2 = w * w + h * h
            d_atan = _div(_col(h) * _E[2] - _col(w) * _E[3], _col(r2))
            v = np.where(ok, k * t * t, 0.0)
            d_v = np.where(_col(ok), -_col(2 * k * t) * d_atan, 0.0)
            den = (1.0 - iou) + v
            pos = v > 0
            aspect = np.where(pos, _div(v * v, den), 0.0)
            d_aspect = np.where(
                _col(pos),
                _div(
                    _col(2 * v * den) * d_v - _col(v * v) * (d_v - d_iou),
                    _col(den) ** 2,
                ),
                0.0,
            )
            metric = metric - aspect
            d_metric = d_metric - d_aspect

        elif kind is LossKind.EIOU:
            for diff, ext, d_ext, axis in ((w - gw, wc, d_wc, 2), (h - gh, hc, d_hc, 3)):
                term = _div(diff * diff, ext * ext)
                d_term = _div(_col(2 * diff) * _E[axis], _col(ext * ext)) - _div(
                    _col(2 * diff * diff) * d_ext, _col(ext**3)
                )
                metric = metric - term
                d_metric = d_metric - d_term

    elif kind is LossKind.SIOU:
        dx = gcx - cx
        dy = gcy - cy
        d_dx = -_E[0]
        d_dy = -_E[1]
        sigma = np.sqrt(dx * dx + dy * dy)
        d_sigma = _div(_col(dx) * d_dx + _col(dy) * d_dy, _col(sigma))
        adx = np.abs(dx)
        ady = np.abs(dy)
        d_adx = _col(np.sign(dx)) * d_dx
        d_ady = _col(np.sign(dy)) * d_dy
        m = np.minimum(adx, ady)
        wm = _col(_w_min(adx, ady))
        d_m = wm * d_adx + (1.0 - wm) * d_ady
        den = sigma + p.eps
        s = m / den
        d_s = (d_m * _col(den) - _col(m) * d_sigma) / _col(den) ** 2
        t = np.arcsin(s)
        angle = np.sin(2 * t)
        d_angle = _col(2 * np.cos(2 * t) / np.sqrt(1 - s * s)) * d_s
        gamma = 2.0 - angle
        d_gamma = -d_angle

        delta = np.zeros_like(cx)
        d_delta = np.zeros_like(anchors)
        for diff, d_diff, ext, d_ext in ((dx, d_dx, wc, d_wc), (dy, d_dy, hc, d_hc)):
            r = _div(diff, ext)
            d_r = _div(d_diff * _col(ext) - _col(diff) * d_ext, _col(ext) ** 2)
            rho = r * r
            d_rho = _col(2 * r) * d_r
            e = np.exp(-gamma * rho)
            delta = delta + (1.0 - e)
            d_delta = d_delta + _col(e) * (d_gamma * _col(rho) + _col(gamma) * d_rho)

        omega = np.zeros_like(cx)
        d_omega = np.zeros_like(anchors)
        for a_ext, g_ext, axis in ((w, gw, 2), (h, gh, 3)):
            diff = a_ext - g_ext
            big = np.maximum(a_ext, g_ext)
            d_big = _col(_w_max(a_ext, g_ext)) * _E[axis]
            d_abs = _col(np.sign(diff)) * _E[axis]
            om = _div(np.abs(diff), big)
            d_om = _div(d_abs * _col(big) - _col(np.abs(diff)) * d_big, _col(big) ** 2)
            base = 1.0 - np.exp(-om)
            omega = omega + base**p.theta
            safe = np.where(base > 0, base, 1.0)
            coef = np.where(base > 0, p.theta * safe ** (p.theta - 1) * np.exp(-om), 0.0)
            d_omega = d_omega + _col(coef) * d_om

        metric = iou - (delta + omega) / 2
        d_metric = d_iou - (d_delta + d_omega) / 2

        nonsmooth |= (dx == 0) | (dy == 0) | (adx == ady) | (w == gw) | (h == gh)

    loss = 1.0 - metric
    grad = -d_metric

    if iv is not None:
        mapped = np.clip((iou - iv.d) / (iv.u - iv.d), 0.0, 1.0)
        slope = np.where((iou >= iv.d) & (iou <= iv.u), iv.slope, 0.0)
        loss = loss + (iou - mapped)
        grad = grad + d_iou * _col(1.0 - slope)
        # iou never leaves [0, 1], so d == 0 and u == 1 are not kinks
        nonsmooth |= ((iou == iv.d) & (iv.d > 0)) | ((iou == iv.u) & (iv.u < 1))

    return BatchEval(loss=loss, grad=grad, iou=iou, iou_grad=d_iou, nonsmooth=nonsmooth)


def loss_grad(
    kind: LossKind | str,
    a: Box,
    g: Box,
    iv: FocalerInterval | None = None,
    p: SiouParams | None = None,
) -> LossEval:
    """Loss value and its analytic gradient with respect to the anchor ``a``."""
    out = evaluate_batch(kind, np.array([a.as_tuple()]), np.array([g.as_tuple()]), iv, p)
    return LossEval(
        loss=float(out.loss[0]),
        grad=Grad4.from_array(out.grad[0]),
        iou=float(out.iou[0]),
        nonsmooth=bool(out.nonsmooth[0]),
    )


def _scalar_loss(kind, a: Box, g: Box, iv, p) -> float:
    if iv is None:
        return plain_loss(kind, a, g, p)
    return focaler_loss(kind, a, g, iv, p).focaler_loss


def fd_steps(a: Box, step: float = 1e-6) -> np.ndarray:
    """Per-coordinate central-difference steps ``step * max(1, |x|)``."""
    return step * np.maximum(1.0, np.abs(np.array(a.as_tuple())))


def fd_grad(
    kind: LossKind | str,
    a: Box,
    g: Box,
    iv: FocalerInterval | None = None,
    p: SiouParams | None = None,
    step: float = 1e-6,
) -> Grad4:
    """Central finite-difference gradient built on the scalar loss functions.

    Steps are relative to each coordinate. A step that would make a width or
    height negative is shrunk once to half the extent; a zero extent cannot
    be differentiated centrally and raises ``ValueError``.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    x0 = np.array(a.as_tuple())
    hs = fd_steps(a, step)
    out = np.empty(4)
    for i in range(4):
        hi = hs[i]
        if i >= 2 and x0[i] - hi < 0:
            hi = x0[i] / 2
            if not hi > 0:
                raise ValueError(f"cannot perturb zero extent of {a} centrally")
        plus = x0.copy()
        minus = x0.copy()
        plus[i] += hi
        minus[i] -= hi
        f_plus = _scalar_loss(kind, Box(*plus), g, iv, p)
        f_minus = _scalar_loss(kind, Box(*minus), g, iv, p)
        out[i] = (f_plus - f_minus) / (2 * hi)
    return Grad4.from_array(out)


def near_nonsmooth(
    kind: LossKind | str,
    a: Box,
    g: Box,
    iv: FocalerInterval | None = None,
    step: float = 1e-6,
    iou_tol: float = 1e-4,
) -> bool:
    """True when a finite-difference stencil of ``step`` may straddle a kink.

    Kinks are coincident opposing edges, the SIoU min/abs/max switches and
    the Focaler interval ends. Edge distances are compared against ten
    stencil widths.
    """
    kind = LossKind.parse(kind)
    hs = fd_steps(a, step)
    tol = 10 * float(hs.max())
    for ea in (a.x1, a.x2):
        for eg in (g.x1, g.x2):
            if abs(ea - eg) < tol:
                return True
    for ea in (a.y1, a.y2):
        for eg in (g.y1, g.y2):
            if abs(ea - eg) < tol:
                return True
    if kind is LossKind.SIOU:
        dx = g.cx - a.cx
        dy = g.cy - a.cy
        if min(abs(dx), abs(dy), abs(abs(dx) - abs(dy)), abs(a.w - g.w), abs(a.h - g.h)) < tol:
            return True
    if iv is not None:
        ev = evaluate_batch(LossKind.IOU, np.array([a.as_tuple()]), np.array([g.as_tuple()]))
        drift = 10 * float(np.abs(ev.iou_grad[0]) @ hs)
        margin = max(iou_tol, drift)
        value = float(ev.iou[0])
        if iv.d > 0 and abs(value - iv.d) < margin:
            return True
        if iv.u < 1 and abs(value - iv.u) < margin:
            return True
    return False


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_err: float
    max_abs_err: float
    n_points: int
    n_skipped: int
    worst_case: tuple[Box, Box, LossKind] | None
    tol_rel: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err <= self.tol_rel

    def to_record(self) -> dict:
        rec = {
            "max_rel_err": self.max_rel_err,
            "max_abs_err": self.max_abs_err,
            "n_points": self.n_points,
            "n_skipped": self.n_skipped,
            "tol_rel": self.tol_rel,
            "passed": self.passed,
        }
        if self.worst_case is not None:
            a, g, kind = self.worst_case
            rec["worst_kind"] = kind.value
            rec.update({f"worst_anchor_{k}": v for k, v in zip(("cx", "cy", "w", "h"), a.as_tuple())})
            rec.update({f"worst_gt_{k}": v for k, v in zip(("cx", "cy", "w", "h"), g.as_tuple())})
        return rec


def sample_pairs(n: int, rng: np.random.Generator) -> list[tuple[Box, Box]]:
    """Random anchor/target pairs, sizes log-uniform in [0.1, 10], centers uniform in [0, 10]^2.

    Odd-indexed anchors are perturbed copies of their target so that half
    the pairs overlap; the rest are drawn independently.
    """
    lo, hi = math.log(0.1), math.log(10.0)
    centers = rng.uniform(0.0, 10.0, size=(n, 2, 2))
    sizes = np.exp(rng.uniform(lo, hi, size=(n, 2, 2)))
    shift = rng.normal(0.0, 0.3, size=(n, 2))
    stretch = np.exp(rng.normal(0.0, 0.3, size=(n, 2)))
    near = np.arange(n) % 2 == 1
    centers[near, 0] = centers[near, 1] + shift[near] * sizes[near, 1]
    sizes[near, 0] = sizes[near, 1] * stretch[near]
    return [
        (
            Box(centers[i, 0, 0], centers[i, 0, 1], sizes[i, 0, 0], sizes[i, 0, 1]),
            Box(centers[i, 1, 0], centers[i, 1, 1], sizes[i, 1, 0], sizes[i, 1, 1]),
        )
        for i in range(n)
    ]


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> tuple[float, float]:
    """(relative, absolute) max-norm error of ``analytic`` against ``numeric``."""
    abs_err = float(np.max(np.abs(analytic - numeric)))
    scale = max(float(np.max(np.abs(numeric))), float(np.max(np.abs(analytic))), GRAD_SCALE_FLOOR)
    return abs_err / scale, abs_err


def grad_check(
    kinds: Sequence[LossKind | str] = ALL_KINDS,
    n: int = 1000,
    seed: int = 0,
    tol_rel: float = 1e-5,
    iv: FocalerInterval | None = None,
    p: SiouParams | None = None,
    step: float = 1e-6,
    pairs: Sequence[tuple[Box, Box]] | None = None,
) -> GradCheckReport:
    """Compare analytic gradients with central differences.

    For each kind, ``n`` pairs are drawn from one seeded stream (or
    ``pairs`` is used as given); points whose stencil may cross a kink are
    skipped.
    """
    if n <= 0 and not pairs:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    max_rel = 0.0
    max_abs = 0.0
    worst = None
    n_points = 0
    n_skipped = 0
    for kind in kinds:
        kind = LossKind.parse(kind)
        batch = list(pairs) if pairs is not None else sample_pairs(n, rng)
        anchors = np.array([a.as_tuple() for a, _ in batch])
        targets = np.array([g.as_tuple() for _, g in batch])
        analytic = evaluate_batch(kind, anchors, targets, iv, p).grad
        for i, (a, g) in enumerate(batch):
            n_points += 1
            if near_nonsmooth(kind, a, g, iv, step):
                n_skipped += 1
                continue
            numeric = fd_grad(kind, a, g, iv, p, step).as_array()
            rel, ab = relative_error(analytic[i], numeric)
            max_abs = max(max_abs, ab)
            if rel > max_rel or worst is None:
                max_rel = max(max_rel, rel)
                worst = (a, g, kind)
    return GradCheckReport(
        max_rel_err=max_rel,
        max_abs_err=max_abs,
        n_points=n_points,
        n_skipped=n_skipped,
        worst_case=worst,
        tol_rel=tol_rel,
    )
