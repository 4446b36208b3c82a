"""IoU distribution statistics and Focaler interval recommendation."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .focaler import FocalerInterval
from .geometry import Box, iou

QUANTILE_LEVELS = {"q05": 0.05, "q25": 0.25, "q50": 0.50, "q75": 0.75, "q95": 0.95}


class FocusMode(str, enum.Enum):
    FOCUS_HARD = "focus_hard"
    FOCUS_EASY = "focus_easy"


@dataclass(frozen=True)
class IoUHistogram:
    edges: list[float]
    counts: list[int]
    n: int
    mean: float
    quantiles: dict[str, float]
    degenerate: int = 0  # pairs with a zero-area box


@dataclass(frozen=True)
class IntervalRecommendation:
    interval: FocalerInterval
    mode: FocusMode
    rationale: str
    fallback: bool = False


def iou_values(pairs: Sequence[tuple[Box, Box]]) -> np.ndarray:
    return np.array([iou(a, g) for a, g in pairs], dtype=float)


def iou_histogram(pairs: Sequence[tuple[Box, Box]], bins: int = 10) -> IoUHistogram:
    """Histogram of anchor/target IoU over ``bins`` uniform bins on [0, 1].

    Quantiles interpolate linearly between order statistics.
    """
    if bins < 2:
        raise ValueError(f"need at least 2 bins, got {bins}")
    if len(pairs) == 0:
        raise ValueError("no pairs to analyze")
    values = iou_values(pairs)
    counts, edges = np.histogram(values, bins=bins, range=(0.0, 1.0))
    qs = np.quantile(values, list(QUANTILE_LEVELS.values()))
    degenerate = sum(1 for a, g in pairs if a.w * a.h == 0 or g.w * g.h == 0)
    return IoUHistogram(
        edges=[float(e) for e in edges],
        counts=[int(c) for c in counts],
        n=len(values),
        mean=float(values.mean()),
        quantiles={k: float(q) for k, q in zip(QUANTILE_LEVELS, qs)},
        degenerate=degenerate,
    )


def recommend_interval(h: IoUHistogram, mode: FocusMode | str) -> IntervalRecommendation:
    """Quantile heuristic for choosing ``(d, u)``.

    ``focus_hard`` uses ``(0, q75)`` so the steeper slope lands on the
    low-IoU bulk; ``focus_easy`` uses ``(q25, 1)``. A collapsed quantile
    falls back to ``(0, 0.5)`` or ``(0.5, 1)``.
    """
    mode = FocusMode(mode)
    if mode is FocusMode.FOCUS_HARD:
        u = min(h.quantiles["q75"], 1.0)
        if u <= 0.0:
            return IntervalRecommendation(FocalerInterval(0.0, 0.5), mode, "q75 = 0", True)
        return IntervalRecommendation(FocalerInterval(0.0, u), mode, "(0, q75)")
    d = max(h.quantiles["q25"], 0.0)
    if d >= 1.0:
        return IntervalRecommendation(FocalerInterval(0.5, 1.0), mode, "q25 = 1", True)
    return IntervalRecommendation(FocalerInterval(d, 1.0), mode, "(q25, 1)")


def analysis_record(h: IoUHistogram, rec: IntervalRecommendation) -> dict:
    return {
        "n": h.n,
        "mean": h.mean,
        "quantiles": dict(h.quantiles),
        "histogram": {"edges": list(h.edges), "counts": list(h.counts)},
        "degenerate": h.degenerate,
        "recommendation": {
            "d": rec.interval.d,
            "u": rec.interval.u,
            "mode": rec.mode.value,
            "rationale": rec.rationale,
            "fallback": rec.fallback,
        },
    }
