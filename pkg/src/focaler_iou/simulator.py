"""Synthetic bounding-box regression by plain gradient descent.

Anchors are pushed toward fixed ground-truth boxes with
``a <- a - lr * grad``; widths and heights are clamped at ``MIN_EXTENT``
after every step. Pairs evolve independently, so a batch can be split into
chunks and evaluated on several threads without changing any result.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .focaler import FocalerInterval
from .geometry import Box, iou
from .gradients import evaluate_batch
from .variants import LossKind, SiouParams

MIN_EXTENT = 1e-6
MAX_ATTEMPTS = 10_000
# pair centers are drawn uniformly from [0, CENTER_SPAN]^2
CENTER_SPAN = 100.0


@dataclass(frozen=True)
class ScenarioSpec:
    n_easy: int = 50
    n_hard: int = 50
    easy_iou_range: tuple[float, float] = (0.5, 0.9)
    hard_iou_range: tuple[float, float] = (0.1, 0.5)
    gt_size_range: tuple[float, float] = (2.0, 10.0)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_easy < 0 or self.n_hard < 0:
            raise ValueError("pair counts must be non-negative")
        for name in ("easy_iou_range", "hard_iou_range"):
            lo, hi = getattr(self, name)
            if not (0.0 <= lo < hi < 1.0):
                raise ValueError(f"{name} must satisfy 0 <= lo < hi < 1, got {(lo, hi)}")
        lo, hi = self.gt_size_range
        if not (0.0 < lo <= hi):
            raise ValueError(f"gt_size_range must satisfy 0 < lo <= hi, got {(lo, hi)}")


@dataclass(frozen=True)
class ScenarioSet:
    pairs: list[tuple[Box, Box]]
    lr: float
    steps: int
    kind: LossKind = LossKind.IOU
    interval: FocalerInterval | None = None
    siou: SiouParams = field(default_factory=SiouParams)
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.pairs:
            raise ValueError("scenario set has no pairs")
        if not (self.lr >= 0 and math.isfinite(self.lr)):
            raise ValueError(f"lr must be a non-negative finite number, got {self.lr}")
        if self.steps <= 0:
            raise ValueError(f"steps must be positive, got {self.steps}")


@dataclass
class PairResult:
    """Trajectory of one pair.

    Row ``k`` of each trace holds the state evaluated *before* update ``k``;
    ``final_iou`` and ``final_l1`` describe the anchor after the last update.
    """

    final_iou: float
    final_l1: float
    iou_trace: np.ndarray
    loss_trace: np.ndarray
    grad_trace: np.ndarray
    anchor_trace: np.ndarray
    diverged: bool = False
    clamp_events: int = 0


@dataclass
class RunResult:
    per_pair: list[PairResult]
    mean_final_iou: float
    mean_final_l1: float
    diverged: int
    clamp_events: int


def _draw_pair(rng: np.random.Generator, size_lo: float, size_hi: float, iou_range, label: str):
    gw, gh = rng.uniform(size_lo, size_hi, size=2)
    gcx, gcy = rng.uniform(0.0, CENTER_SPAN, size=2)
    gt = Box(float(gcx), float(gcy), float(gw), float(gh))
    lo, hi = iou_range
    for _ in range(MAX_ATTEMPTS):
        mag = rng.uniform()
        off = rng.uniform(-1.0, 1.0, size=2) * mag
        scale = np.exp(rng.uniform(-1.0, 1.0, size=2) * mag * math.log(2.0))
        anchor = Box(
            float(gcx + off[0] * gw),
            float(gcy + off[1] * gh),
            float(gw * scale[0]),
            float(gh * scale[1]),
        )
        if lo < iou(anchor, gt) < hi:
            return anchor, gt
    raise ValueError(
        f"could not place a {label} anchor with IoU in {iou_range} after {MAX_ATTEMPTS} attempts"
    )


def generate_scenarios(spec: ScenarioSpec) -> list[tuple[Box, Box]]:
    """Easy pairs first, then hard pairs, all from one seeded stream.

    Hard pairs additionally use ground-truth sizes from the lowest tenth of
    ``gt_size_range``.
    """
    rng = np.random.default_rng(spec.seed)
    lo, hi = spec.gt_size_range
    pairs = []
    for _ in range(spec.n_easy):
        pairs.append(_draw_pair(rng, lo, hi, spec.easy_iou_range, "easy"))
    hard_hi = lo + 0.1 * (hi - lo)
    for _ in range(spec.n_hard):
        pairs.append(_draw_pair(rng, lo, hard_hi, spec.hard_iou_range, "hard"))
    return pairs


def _descend(
    anchors: np.ndarray,
    targets: np.ndarray,
    s: ScenarioSet,
) -> dict[str, np.ndarray]:
    n = len(anchors)
    a = anchors.copy()
    iou_tr = np.zeros((n, s.steps))
    loss_tr = np.zeros((n, s.steps))
    grad_tr = np.zeros((n, s.steps, 4))
    anchor_tr = np.zeros((n, s.steps, 4))
    active = np.ones(n, dtype=bool)
    clamps = np.zeros(n, dtype=int)
    for k in range(s.steps):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        # runaway states are caught by the finiteness checks below
        with np.errstate(over="ignore", invalid="ignore"):
            ev = evaluate_batch(s.kind, a[idx], targets[idx], s.interval, s.siou)
        anchor_tr[idx, k] = a[idx]
        iou_tr[idx, k] = ev.iou
        loss_tr[idx, k] = ev.loss
        grad_tr[idx, k] = ev.grad
        bad = ~np.all(np.isfinite(ev.grad), axis=1)
        if bad.any():
            active[idx[bad]] = False
            idx = idx[~bad]
            ev_grad = ev.grad[~bad]
        else:
            ev_grad = ev.grad
        with np.errstate(over="ignore", invalid="ignore"):
            stepped = a[idx] - s.lr * ev_grad
        small = stepped[:, 2:] < MIN_EXTENT
        clamps[idx] += small.sum(axis=1)
        stepped[:, 2:] = np.maximum(stepped[:, 2:], MIN_EXTENT)
        blown = ~np.all(np.isfinite(stepped), axis=1)
        active[idx[blown]] = False
        a[idx[~blown]] = stepped[~blown]
    return {
        "final": a,
        "iou": iou_tr,
        "loss": loss_tr,
        "grad": grad_tr,
        "anchor": anchor_tr,
        "diverged": ~active,
        "clamps": clamps,
    }


def run(s: ScenarioSet, workers: int = 1) -> RunResult:
    """Run gradient descent on every pair of ``s``.

    ``workers > 1`` splits the pairs into contiguous chunks evaluated on a
    thread pool; results are reassembled in pair order.
    """
    anchors = np.array([a.as_tuple() for a, _ in s.pairs], dtype=float)
    targets = np.array([g.as_tuple() for _, g in s.pairs], dtype=float)
    chunks = np.array_split(np.arange(len(anchors)), max(1, min(workers, len(anchors))))
    if len(chunks) == 1:
        parts = [_descend(anchors, targets, s)]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(lambda c: _descend(anchors[c], targets[c], s), chunks))
    out = {key: np.concatenate([p[key] for p in parts]) for key in parts[0]}

    per_pair = []
    for i, (_, g) in enumerate(s.pairs):
        final = out["final"][i]
        diverged = bool(out["diverged"][i])
        if diverged:
            final_iou = math.nan
            final_l1 = math.nan
        else:
            final_iou = iou(Box(*(float(x) for x in final)), g)
            final_l1 = float(np.sum(np.abs(final - targets[i])))
        per_pair.append(
            PairResult(
                final_iou=final_iou,
                final_l1=final_l1,
                iou_trace=out["iou"][i],
                loss_trace=out["loss"][i],
                grad_trace=out["grad"][i],
                anchor_trace=out["anchor"][i],
                diverged=diverged,
                clamp_events=int(out["clamps"][i]),
            )
        )
    kept = [r for r in per_pair if not r.diverged]
    mean_iou = math.fsum(r.final_iou for r in kept) / len(kept) if kept else math.nan
    mean_l1 = math.fsum(r.final_l1 for r in kept) / len(kept) if kept else math.nan
    return RunResult(
        per_pair=per_pair,
        mean_final_iou=mean_iou,
        mean_final_l1=mean_l1,
        diverged=len(per_pair) - len(kept),
        clamp_events=int(out["clamps"].sum()),
    )


@dataclass(frozen=True)
class RunConfig:
    kind: LossKind
    interval: FocalerInterval | None = None
    config_id: str = ""

    def label(self, index: int) -> str:
        return self.config_id or str(index)


@dataclass
class SummaryRow:
    config_id: str
    kind: LossKind
    interval: FocalerInterval | None
    mean_final_iou: float
    mean_final_l1: float
    diverged: int
    result: RunResult


def compare(
    configs: list[RunConfig],
    spec: ScenarioSpec,
    lr: float,
    steps: int,
    siou: SiouParams | None = None,
    workers: int = 1,
) -> list[SummaryRow]:
    """Run every configuration on the same generated scenario list."""
    if not configs:
        raise ValueError("no configurations to compare")
    pairs = generate_scenarios(spec)
    siou = siou or SiouParams()
    rows = []
    for i, cfg in enumerate(configs):
        s = ScenarioSet(
            pairs=pairs,
            lr=lr,
            steps=steps,
            kind=cfg.kind,
            interval=cfg.interval,
            siou=siou,
            seed=spec.seed,
        )
        res = run(s, workers=workers)
        rows.append(
            SummaryRow(
                config_id=cfg.label(i),
                kind=cfg.kind,
                interval=cfg.interval,
                mean_final_iou=res.mean_final_iou,
                mean_final_l1=res.mean_final_l1,
                diverged=res.diverged,
                result=res,
            )
        )
    return rows
