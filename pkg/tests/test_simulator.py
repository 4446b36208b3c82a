import math

import numpy as np
import pytest

from focaler_iou import Box, FocalerInterval, LossKind
from focaler_iou.geometry import iou
from focaler_iou.gradients import evaluate_batch
from focaler_iou.io import load_config, default_config_path
from focaler_iou.simulator import (
    MIN_EXTENT,
    RunConfig,
    ScenarioSet,
    ScenarioSpec,
    compare,
    generate_scenarios,
    run,
)


def test_empty_spec():
    assert generate_scenarios(ScenarioSpec(n_easy=0, n_hard=0)) == []


def test_easy_pairs_hit_range():
    pairs = generate_scenarios(ScenarioSpec(n_easy=100, n_hard=0, easy_iou_range=(0.5, 0.9), seed=3))
    assert len(pairs) == 100
    assert all(0.5 < iou(a, g) < 0.9 for a, g in pairs)


def test_hard_pairs_use_small_targets():
    spec = ScenarioSpec(n_easy=20, n_hard=30, gt_size_range=(2.0, 12.0), seed=4)
    pairs = generate_scenarios(spec)
    hard = pairs[20:]
    assert all(spec.hard_iou_range[0] < iou(a, g) < spec.hard_iou_range[1] for a, g in hard)
    assert all(2.0 <= g.w <= 3.0 and 2.0 <= g.h <= 3.0 for _, g in hard)


def test_generation_deterministic():
    spec = ScenarioSpec(n_easy=30, n_hard=30, seed=9)
    assert generate_scenarios(spec) == generate_scenarios(spec)
    assert generate_scenarios(spec) != generate_scenarios(ScenarioSpec(n_easy=30, n_hard=30, seed=10))


def test_infeasible_range_reports_range():
    spec = ScenarioSpec(n_easy=1, n_hard=0, easy_iou_range=(0.999999, 0.9999999))
    with pytest.raises(ValueError, match="0.999999"):
        generate_scenarios(spec)


def test_spec_validation():
    with pytest.raises(ValueError):
        ScenarioSpec(easy_iou_range=(0.9, 0.5))
    with pytest.raises(ValueError):
        ScenarioSpec(gt_size_range=(0.0, 1.0))
    with pytest.raises(ValueError):
        ScenarioSet(pairs=[], lr=0.1, steps=10)
    pair = [(Box(0, 0, 1, 1), Box(0, 0, 1, 1))]
    with pytest.raises(ValueError):
        ScenarioSet(pairs=pair, lr=0.1, steps=0)
    with pytest.raises(ValueError):
        ScenarioSet(pairs=pair, lr=-1.0, steps=10)


@pytest.mark.parametrize("kind", list(LossKind))
def test_start_at_optimum_stays(kind):
    g = Box(10, 20, 3, 4)
    res = run(ScenarioSet(pairs=[(g, g)], lr=0.1, steps=50, kind=kind))
    pr = res.per_pair[0]
    assert pr.final_iou == 1.0
    assert pr.final_l1 == 0.0
    assert np.all(pr.iou_trace == 1.0)


def test_zero_lr_is_noop():
    pairs = generate_scenarios(ScenarioSpec(n_easy=10, n_hard=10, seed=2))
    res = run(ScenarioSet(pairs=pairs, lr=0.0, steps=20, kind=LossKind.SIOU))
    for (a, g), pr in zip(pairs, res.per_pair):
        assert pr.final_iou == iou(a, g)
        assert np.all(pr.anchor_trace == np.array(a.as_tuple()))


def test_mean_consistency_and_trace_ranges():
    pairs = generate_scenarios(ScenarioSpec(n_easy=15, n_hard=15, seed=5))
    res = run(ScenarioSet(pairs=pairs, lr=0.1, steps=100, kind=LossKind.CIOU))
    assert abs(res.mean_final_iou - np.mean([p.final_iou for p in res.per_pair])) <= 1e-12
    assert abs(res.mean_final_l1 - np.mean([p.final_l1 for p in res.per_pair])) <= 1e-12
    for pr in res.per_pair:
        assert len(pr.iou_trace) == 100
        assert np.all((pr.iou_trace >= 0) & (pr.iou_trace <= 1))


def test_divergence_excluded_from_means():
    g = Box(0, 0, 2, 2)
    pairs = [(Box(0.5, 0.2, 1.5, 2.5), g), (g, g)]
    res = run(ScenarioSet(pairs=pairs, lr=1e308, steps=5, kind=LossKind.GIOU))
    assert res.per_pair[0].diverged
    assert not res.per_pair[1].diverged
    assert res.diverged == 1
    assert res.mean_final_iou == 1.0


def test_extents_clamped():
    g = Box(0, 0, 1, 1)
    res = run(ScenarioSet(pairs=[(Box(0, 0, 3, 3), g)], lr=50.0, steps=3, kind=LossKind.IOU))
    assert res.clamp_events > 0
    assert np.all(res.per_pair[0].anchor_trace[1:, 2:] >= MIN_EXTENT)


def test_thread_count_invariance():
    pairs = generate_scenarios(ScenarioSpec(n_easy=25, n_hard=25, seed=6))
    s = ScenarioSet(pairs=pairs, lr=0.1, steps=200, kind=LossKind.SIOU, interval=FocalerInterval(0.1, 0.9))
    base = run(s, workers=1)
    for workers in (2, 3, 8):
        other = run(s, workers=workers)
        assert other.mean_final_iou == base.mean_final_iou
        for a, b in zip(base.per_pair, other.per_pair):
            assert np.array_equal(a.grad_trace, b.grad_trace)
            assert np.array_equal(a.iou_trace, b.iou_trace)


def test_default_giou_calibration():
    cfg = load_config(default_config_path())
    pairs = generate_scenarios(cfg.scenario)
    assert len(pairs) == 100
    assert all(iou(a, g) > 0.1 for a, g in pairs)
    res = run(ScenarioSet(pairs=pairs, lr=cfg.lr, steps=cfg.steps, kind=LossKind.GIOU))
    assert res.mean_final_iou >= 0.9
    assert res.diverged == 0


def test_compare_single_matches_run():
    spec = ScenarioSpec(n_easy=10, n_hard=10, seed=7)
    rows = compare([RunConfig(LossKind.DIOU)], spec, lr=0.1, steps=50)
    direct = run(ScenarioSet(pairs=generate_scenarios(spec), lr=0.1, steps=50, kind=LossKind.DIOU))
    assert len(rows) == 1
    assert rows[0].mean_final_iou == direct.mean_final_iou
    assert rows[0].mean_final_l1 == direct.mean_final_l1


def test_compare_duplicates_identical():
    spec = ScenarioSpec(n_easy=10, n_hard=10, seed=8)
    cfg = RunConfig(LossKind.EIOU, FocalerInterval(0.0, 0.8))
    r1, r2 = compare([cfg, cfg], spec, lr=0.1, steps=50)
    assert (r1.mean_final_iou, r1.mean_final_l1) == (r2.mean_final_iou, r2.mean_final_l1)
    assert r1.config_id == "0" and r2.config_id == "1"


def _slope_ratios(result, targets, u):
    """Ratios of applied gradient to the plain-IoU gradient at the same states."""
    ratios, above = [], []
    for pr, g in zip(result.per_pair, targets):
        plain = evaluate_batch(LossKind.IOU, pr.anchor_trace, np.tile(g.as_tuple(), (len(pr.anchor_trace), 1)))
        for k in range(len(pr.iou_trace)):
            if plain.nonsmooth[k]:
                continue
            if pr.iou_trace[k] < u:
                ref = np.linalg.norm(plain.grad[k])
                if ref > 0:
                    ratios.append(np.linalg.norm(pr.grad_trace[k]) / ref)
            elif pr.iou_trace[k] > u:
                above.append(np.abs(pr.grad_trace[k]).max())
    return np.array(ratios), np.array(above)


def test_focusing_effect_on_traces():
    spec = ScenarioSpec(n_easy=5, n_hard=25, seed=11)
    u = 0.5
    rows = compare([RunConfig(LossKind.IOU), RunConfig(LossKind.IOU, FocalerInterval(0.0, u))], spec, 0.1, 200)
    targets = [g for _, g in generate_scenarios(spec)]
    ratios, above = _slope_ratios(rows[1].result, targets, u)
    assert len(ratios) > 100
    assert np.all(np.abs(ratios - 1 / u) <= 1e-9)
    assert np.all(above == 0.0)
    # same starting states, so step 0 compares the two runs directly
    for plain, foc in zip(rows[0].result.per_pair, rows[1].result.per_pair):
        if foc.iou_trace[0] < u:
            np.testing.assert_allclose(foc.grad_trace[0], plain.grad_trace[0] / u, rtol=1e-12, atol=0)
