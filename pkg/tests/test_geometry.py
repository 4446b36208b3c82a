import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from focaler_iou import (
    Box,
    CornerBox,
    area,
    center_dist2,
    enclose_info,
    intersect_area,
    iou,
    union_area,
)

from focaler_iou.geometry import corner_area

from conftest import random_pairs
from oracles import iou_monte_carlo, raster_areas

SQ02 = Box.from_corners(0, 0, 2, 2)
SQ13 = Box.from_corners(1, 1, 3, 3)


@pytest.mark.parametrize(
    "box, expected",
    [(Box(0, 0, 2, 2), 4.0), (Box(1, 1, 0, 5), 0.0), (Box(0.5, 0.5, 3, 7), 21.0)],
)
def test_area(box, expected):
    assert area(box) == expected


def test_box_rejects_invalid():
    with pytest.raises(ValueError):
        Box(0, 0, -1, 1)
    with pytest.raises(ValueError):
        Box(math.nan, 0, 1, 1)
    with pytest.raises(ValueError):
        Box(0, 0, math.inf, 1)
    with pytest.raises(ValueError):
        CornerBox(1, 0, 0, 1)


def test_corner_round_trip(rng):
    for _ in range(200):
        x1, x2 = np.sort(rng.uniform(-50, 50, 2))
        y1, y2 = np.sort(rng.uniform(-50, 50, 2))
        c = Box.from_corners(x1, y1, x2, y2).to_corners()
        assert c.as_tuple() == pytest.approx((x1, y1, x2, y2), rel=1e-12, abs=1e-12)


def test_overlapping_squares_match_raster_oracle():
    inter, union = raster_areas(SQ02.to_corners().as_tuple(), SQ13.to_corners().as_tuple())
    assert inter == pytest.approx(1.0, abs=1e-2)
    assert union == pytest.approx(7.0, abs=1e-2)
    assert intersect_area(SQ02, SQ13) == 1.0
    assert union_area(SQ02, SQ13) == 7.0
    assert iou(SQ02, SQ13) == pytest.approx(1 / 7, abs=1e-12)


def test_intersection_trivial_cases():
    assert intersect_area(SQ02, SQ02) == 4.0
    assert intersect_area(SQ02, Box.from_corners(3, 3, 4, 4)) == 0.0
    assert union_area(SQ02, SQ02) == area(SQ02)
    unit_a = Box.from_corners(0, 0, 1, 1)
    unit_b = Box.from_corners(5, 5, 6, 6)
    assert union_area(unit_a, unit_b) == 2.0


def test_iou_trivial_cases():
    assert iou(SQ02, SQ02) == 1.0
    assert iou(SQ02, Box.from_corners(3, 3, 4, 4)) == 0.0
    assert iou(Box(0, 0, 0, 0), Box(0, 0, 0, 0)) == 0.0
    assert iou(Box(0, 0, 0, 1), Box(5, 0, 1, 0)) == 0.0


def test_enclose_info():
    info = enclose_info(Box.from_corners(0, 0, 1, 1), Box.from_corners(2, 2, 3, 3))
    assert info.enclose.to_corners().as_tuple() == (0, 0, 3, 3)
    assert info.enclose_area == 9.0
    assert info.diag2 == 18.0

    same = enclose_info(SQ13, SQ13)
    assert same.enclose == SQ13
    assert same.diag2 == SQ13.w**2 + SQ13.h**2

    outer = Box(5, 5, 4, 6)
    inner = Box(5.5, 4.5, 1, 2)
    assert enclose_info(inner, outer).enclose == outer


def test_center_dist2():
    assert center_dist2(Box(1, 1, 2, 2), Box(1, 1, 5, 3)) == 0.0
    assert center_dist2(Box(0, 0, 1, 1), Box(3, 4, 1, 1)) == 25.0
    assert center_dist2(Box(1.5, 2.0, 1, 1), Box(-0.5, 1.0, 2, 2)) == pytest.approx(5.0, abs=1e-15)


def test_commutativity_exact():
    for a, b in random_pairs(10_000, seed=11):
        assert iou(a, b) == iou(b, a)
        assert intersect_area(a, b) == intersect_area(b, a)
        assert union_area(a, b) == union_area(b, a)
        assert enclose_info(a, b) == enclose_info(b, a)
        assert center_dist2(a, b) == center_dist2(b, a)


def test_enclose_invariants():
    for a, b in random_pairs(1000, seed=12):
        info = enclose_info(a, b)
        c = info.corners
        for box in (a, b):
            k = box.to_corners()
            assert c.x1 <= k.x1 and c.y1 <= k.y1 and c.x2 >= k.x2 and c.y2 >= k.y2
            assert info.enclose_area >= corner_area(box)
        assert info.diag2 == info.wc**2 + info.hc**2


def test_monte_carlo_oracle_sample():
    rng = np.random.default_rng(5)
    for a, b in random_pairs(10, seed=13):
        est = iou_monte_carlo(a.to_corners().as_tuple(), b.to_corners().as_tuple(), 200_000, rng)
        assert abs(iou(a, b) - est) <= 5e-3


def test_containment():
    for a, b in random_pairs(500, seed=14):
        inner = Box(b.cx, b.cy, b.w * 0.3, b.h * 0.6)
        assert iou(inner, b) == pytest.approx(area(inner) / area(b), rel=1e-12)


coord = st.floats(-100, 100, allow_nan=False)
extent = st.floats(0.01, 50, allow_nan=False)
boxes = st.builds(Box, coord, coord, extent, extent)


unit_coord = st.floats(0, 10)
unit_boxes = st.builds(Box, unit_coord, unit_coord, st.floats(0.1, 10), st.floats(0.1, 10))


@given(unit_boxes, unit_boxes, st.floats(-10, 10), st.floats(-10, 10))
def test_translation_invariance(a, b, tx, ty):
    assert abs(iou(a.translated(tx, ty), b.translated(tx, ty)) - iou(a, b)) <= 1e-12


@given(boxes, boxes, st.floats(0.01, 100))
def test_scale_invariance(a, b, s):
    assert iou(a.scaled(s), b.scaled(s)) == pytest.approx(iou(a, b), abs=1e-9)


@given(boxes, boxes)
def test_iou_range_and_identity(a, b):
    v = iou(a, b)
    assert 0.0 <= v <= 1.0
    assert iou(a, a) == 1.0
