"""Command-line interface.

Exit codes: 0 success, 1 validation or parse error, 2 gradient check over
tolerance.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analysis, io
from .focaler import FocalerInterval, focaler_loss
from .gradients import grad_check
from .simulator import RunConfig, compare, generate_scenarios
from .variants import ALL_KINDS, LossKind, SiouParams, metric

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_CHECK_FAILED = 2

REPORT_TITLE = "paper-reported detector results (not reproduced by this tool)"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_INVALID


def _loss_token(token: str) -> LossKind:
    try:
        return LossKind.parse(token)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _kinds_list(text: str) -> list[LossKind]:
    return [_loss_token(t.strip()) for t in text.split(",") if t.strip()]


def _float_grid(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _add_focaler(p: argparse.ArgumentParser) -> None:
    p.add_argument("--focaler-d", type=float, default=None)
    p.add_argument("--focaler-u", type=float, default=None)


def _add_siou(p: argparse.ArgumentParser) -> None:
    p.add_argument("--siou-eps", type=float, default=1e-7)
    p.add_argument("--siou-theta", type=float, default=4.0)


def _interval(args) -> FocalerInterval | None:
    return io.parse_interval(args.focaler_d, args.focaler_u, "--focaler-d/--focaler-u")


def _siou(args) -> SiouParams:
    try:
        return SiouParams(theta=args.siou_theta, eps=args.siou_eps)
    except ValueError as exc:
        raise io.InputError(f"--siou-theta/--siou-eps: {exc}") from None


def _open_out(path: str | None):
    if path is None or path == "-":
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", newline="", encoding="utf-8")


def cmd_eval(args) -> int:
    records = io.read_box_pairs(args.input)
    iv = _interval(args)
    p = _siou(args)
    with _open_out(args.out) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(io.EVAL_HEADER)
        for r in records:
            a, g = r.boxes()
            br = metric(args.loss, a, g, p)
            row = [r.id, io.fmt(br.iou), io.fmt(br.metric), io.fmt(1.0 - br.metric), "", ""]
            if iv is not None:
                fe = focaler_loss(args.loss, a, g, iv, p)
                row[4:] = [io.fmt(fe.iou_focaler), io.fmt(fe.focaler_loss)]
            w.writerow(row)
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    report = grad_check(
        kinds=args.kinds,
        n=args.n,
        seed=args.seed,
        tol_rel=args.tol,
        iv=_interval(args),
        p=_siou(args),
    )
    text = json.dumps(report.to_record(), indent=2)
    with _open_out(args.out) as fh:
        fh.write(text + "\n")
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_simulate(args) -> int:
    cfg = io.load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = compare(cfg.configs, cfg.scenario, cfg.lr, cfg.steps, cfg.siou, workers=args.workers)
    for row in rows:
        io.write_trace(out / f"trace_{row.config_id}.csv", row.result)
    io.write_summary(out / "summary.csv", rows)
    for row in rows:
        print(f"{row.config_id}: mean_final_iou={io.fmt(row.mean_final_iou)} diverged={row.diverged}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = io.load_config(args.config)
    kind = args.loss or cfg.configs[0].kind
    grid = []
    skipped = 0
    for d in sorted(set(args.d_grid)):
        for u in sorted(set(args.u_grid)):
            if not (0.0 <= d <= 1.0 and 0.0 <= u <= 1.0):
                return _fail(f"grid value outside [0, 1]: d={d}, u={u}")
            if d >= u:
                skipped += 1
                continue
            grid.append(RunConfig(kind, FocalerInterval(d, u), f"d{io.fmt(d)}_u{io.fmt(u)}"))
    print(f"sweep: {len(grid)} configurations, {skipped} skipped (d >= u)", file=sys.stderr)
    if not grid:
        return _fail("every (d, u) grid pair has d >= u")
    rows = compare(grid, cfg.scenario, cfg.lr, cfg.steps, cfg.siou, workers=args.workers)
    io.write_summary(args.out, rows)
    if args.curves:
        with open(args.curves, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["focaler_d", "focaler_u", "step", "mean_iou"])
            for row in rows:
                kept = [p.iou_trace for p in row.result.per_pair if not p.diverged]
                curve = np.mean(kept, axis=0)
                for k, v in enumerate(curve):
                    w.writerow([io.fmt(row.interval.d), io.fmt(row.interval.u), k, io.fmt(v)])
    return EXIT_OK


def cmd_analyze(args) -> int:
    records = io.read_box_pairs(args.input)
    hist = analysis.iou_histogram([r.boxes() for r in records], bins=args.bins)
    rec = analysis.recommend_interval(hist, args.mode)
    with _open_out(args.out) as fh:
        fh.write(json.dumps(analysis.analysis_record(hist, rec), indent=2) + "\n")
    return EXIT_OK


def cmd_generate(args) -> int:
    cfg = io.load_config(args.config)
    io.write_box_pairs(args.out, io.records_from_pairs(generate_scenarios(cfg.scenario)))
    return EXIT_OK


def render_report() -> str:
    rows = io.load_reported_results()
    baseline = {}
    lines = [
        REPORT_TITLE,
        "",
        f"{'table':<6}{'detector':<24}{'loss':<15}{'AP50':>8}{'mAP50:95':>10}{'dAP50':>8}{'dmAP':>8}",
    ]
    for r in rows:
        base = baseline.setdefault(r.table, r)
        if base is r:
            d_ap, d_map = "", ""
        else:
            d_ap = f"{r.ap50 - base.ap50:+.1f}"
            d_map = f"{r.map5095 - base.map5095:+.1f}"
        lines.append(
            f"{r.table:<6}{r.detector:<24}{r.loss_name:<15}{r.ap50:>8.1f}{r.map5095:>10.1f}{d_ap:>8}{d_map:>8}"
        )
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    text = render_report()
    with _open_out(args.out) as fh:
        fh.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="focaler-iou", description="IoU-family regression losses and Focaler-IoU tools")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="evaluate a loss over a box-pair CSV")
    p.add_argument("input")
    p.add_argument("--loss", type=_loss_token, required=True)
    _add_focaler(p)
    _add_siou(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="analytic vs finite-difference gradients")
    p.add_argument("--kinds", type=_kinds_list, default=list(ALL_KINDS))
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--tol", type=float, default=1e-4)
    _add_focaler(p)
    _add_siou(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("simulate", help="run the regression simulator from a JSON config")
    p.add_argument("config", nargs="?", default=str(io.default_config_path()))
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="grid over Focaler intervals")
    p.add_argument("config", nargs="?", default=str(io.default_config_path()))
    p.add_argument("--d-grid", type=_float_grid, required=True)
    p.add_argument("--u-grid", type=_float_grid, required=True)
    p.add_argument("--loss", type=_loss_token, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--curves", default=None, help="also write mean IoU per step")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="IoU statistics and interval recommendation")
    p.add_argument("input")
    p.add_argument("--mode", choices=[m.value for m in analysis.FocusMode], default="focus_hard")
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("generate", help="write the config's scenario pairs as a box-pair CSV")
    p.add_argument("config", nargs="?", default=str(io.default_config_path()))
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("report", help="print the bundled externally reported detector results")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (io.InputError, ValueError) as exc:
        return _fail(str(exc))
    except OSError as exc:
        return _fail(f"{exc.strerror or exc}: {exc.filename or ''}".rstrip(": "))


if __name__ == "__main__":
    sys.exit(main())
