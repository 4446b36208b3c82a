"""File formats: box-pair CSV, simulation configs, trace and summary CSV."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .focaler import FocalerInterval
from .geometry import Box, CornerBox
from .simulator import RunConfig, RunResult, ScenarioSpec, SummaryRow
from .variants import LossKind, SiouParams

BOX_HEADER = ["id", "x1", "y1", "x2", "y2", "gx1", "gy1", "gx2", "gy2"]
EVAL_HEADER = ["id", "iou", "metric", "loss", "focaler_iou", "focaler_loss"]
TRACE_HEADER = ["pair_id", "step", "iou", "loss", "d_cx", "d_cy", "d_w", "d_h"]
SUMMARY_HEADER = [
    "config_id", "kind", "focaler_d", "focaler_u", "mean_final_iou", "mean_final_l1", "diverged",
]


class InputError(ValueError):
    """Malformed input file or config."""


def fmt(x: float) -> str:
    """Nine significant digits, the fixed numeric format of every output file."""
    return f"{x:.9g}"


@dataclass(frozen=True)
class BoxPairRecord:
    id: str
    anchor: CornerBox
    gt: CornerBox

    def boxes(self) -> tuple[Box, Box]:
        return self.anchor.to_box(), self.gt.to_box()


def read_box_pairs(path: str | Path) -> list[BoxPairRecord]:
    """Parse a box-pair CSV; errors name the offending line."""
    records: list[BoxPairRecord] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InputError(f"{path}: no records")
        if [c.strip() for c in header] != BOX_HEADER:
            raise InputError(f"{path}:1: expected header {','.join(BOX_HEADER)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(BOX_HEADER):
                raise InputError(f"{path}:{line}: expected {len(BOX_HEADER)} fields, got {len(row)}")
            rid = row[0].strip()
            if rid in seen:
                raise InputError(f"{path}:{line}: duplicate id {rid!r}")
            try:
                v = [float(c) for c in row[1:]]
                anchor = CornerBox(*v[:4])
                gt = CornerBox(*v[4:])
            except ValueError as exc:
                raise InputError(f"{path}:{line}: {exc}") from None
            seen.add(rid)
            records.append(BoxPairRecord(rid, anchor, gt))
    if not records:
        raise InputError(f"{path}: no records")
    return records


def write_box_pairs(path: str | Path, records: Iterable[BoxPairRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BOX_HEADER)
        for r in records:
            w.writerow([r.id, *map(fmt, r.anchor.as_tuple()), *map(fmt, r.gt.as_tuple())])


def records_from_pairs(pairs: Sequence[tuple[Box, Box]]) -> list[BoxPairRecord]:
    return [BoxPairRecord(str(i), a.to_corners(), g.to_corners()) for i, (a, g) in enumerate(pairs)]


def _opt(x: float | None) -> str:
    return "" if x is None else fmt(x)


def write_summary(path: str | Path, rows: Sequence[SummaryRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for r in rows:
            iv = r.interval
            w.writerow([
                r.config_id,
                r.kind.value,
                _opt(iv.d if iv else None),
                _opt(iv.u if iv else None),
                fmt(r.mean_final_iou),
                fmt(r.mean_final_l1),
                r.diverged,
            ])


def write_trace(path: str | Path, result: RunResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for pid, pr in enumerate(result.per_pair):
            for k in range(len(pr.iou_trace)):
                w.writerow([
                    pid, k, fmt(pr.iou_trace[k]), fmt(pr.loss_trace[k]),
                    *map(fmt, pr.grad_trace[k]),
                ])


@dataclass(frozen=True)
class SimulationConfig:
    scenario: ScenarioSpec
    lr: float
    steps: int
    siou: SiouParams
    configs: list[RunConfig]


def _field(obj: dict, key: str, where: str, kind=float, default=None):
    if key not in obj:
        if default is not None:
            return default
        raise InputError(f"{where}.{key}: missing")
    val = obj[key]
    try:
        if kind is int:
            if isinstance(val, bool) or not float(val).is_integer():
                raise ValueError
            return int(val)
        if kind is float:
            if isinstance(val, bool):
                raise ValueError
            out = float(val)
            if not math.isfinite(out):
                raise ValueError
            return out
        if kind is tuple:
            lo, hi = (float(x) for x in val)
            return (lo, hi)
    except (TypeError, ValueError):
        raise InputError(f"{where}.{key}: invalid value {val!r}") from None
    return val


def parse_interval(d, u, where: str) -> FocalerInterval | None:
    if d is None and u is None:
        return None
    if d is None or u is None:
        raise InputError(f"{where}: focaler_d and focaler_u must be given together")
    try:
        return FocalerInterval(float(d), float(u))
    except (TypeError, ValueError) as exc:
        raise InputError(f"{where}: {exc}") from None


def parse_config(doc: dict) -> SimulationConfig:
    """Validate a simulation config document; errors carry the field path."""
    if not isinstance(doc, dict):
        raise InputError("config: expected a JSON object")
    sc = doc.get("scenario", {})
    if not isinstance(sc, dict):
        raise InputError("scenario: expected an object")
    defaults = ScenarioSpec()
    try:
        spec = ScenarioSpec(
            n_easy=_field(sc, "n_easy", "scenario", int, defaults.n_easy),
            n_hard=_field(sc, "n_hard", "scenario", int, defaults.n_hard),
            easy_iou_range=_field(sc, "easy_iou_range", "scenario", tuple, defaults.easy_iou_range),
            hard_iou_range=_field(sc, "hard_iou_range", "scenario", tuple, defaults.hard_iou_range),
            gt_size_range=_field(sc, "gt_size_range", "scenario", tuple, defaults.gt_size_range),
            seed=_field(sc, "seed", "scenario", int, defaults.seed),
        )
    except InputError:
        raise
    except ValueError as exc:
        raise InputError(f"scenario: {exc}") from None
    if spec.n_easy + spec.n_hard == 0:
        raise InputError("scenario: n_easy + n_hard must be positive")

    lr = _field(doc, "lr", "config")
    if lr < 0:
        raise InputError(f"config.lr: must be non-negative, got {lr}")
    steps = _field(doc, "steps", "config", int)
    if steps <= 0:
        raise InputError(f"config.steps: must be positive, got {steps}")

    sp = doc.get("siou", {})
    try:
        siou = SiouParams(
            theta=_field(sp, "theta", "siou", float, 4.0),
            eps=_field(sp, "eps", "siou", float, 1e-7),
        )
    except InputError:
        raise
    except ValueError as exc:
        raise InputError(f"siou: {exc}") from None

    raw = doc.get("configs")
    if not isinstance(raw, list) or not raw:
        raise InputError("configs: expected a non-empty list")
    configs = []
    for i, c in enumerate(raw):
        where = f"configs[{i}]"
        if not isinstance(c, dict):
            raise InputError(f"{where}: expected an object")
        try:
            kind = LossKind.parse(str(c.get("kind", "")))
        except ValueError as exc:
            raise InputError(f"{where}.kind: {exc}") from None
        iv = parse_interval(c.get("focaler_d"), c.get("focaler_u"), where)
        configs.append(RunConfig(kind, iv, str(c.get("id", ""))))
    return SimulationConfig(spec, lr, steps, siou, configs)


def load_config(path: str | Path) -> SimulationConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    return parse_config(doc)


def default_config_path() -> Path:
    return Path(str(resources.files("focaler_iou") / "data" / "default_config.json"))


@dataclass(frozen=True)
class FixtureRow:
    table: str
    detector: str
    loss_name: str
    ap50: float
    map5095: float


def load_reported_results() -> list[FixtureRow]:
    """Detector results shipped as data; never computed by this package."""
    text = (resources.files("focaler_iou") / "data" / "reported_results.csv").read_text("utf-8")
    rows = csv.DictReader(text.splitlines())
    return [
        FixtureRow(r["table"], r["detector"], r["loss_name"], float(r["ap50"]), float(r["map5095"]))
        for r in rows
    ]
