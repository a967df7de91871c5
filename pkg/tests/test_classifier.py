import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abstain.classifier import (
    Classifier1D,
    IntervalSet,
    Interval,
    Label,
    RegionSpecD,
    classify,
    classify_d,
    classify_points,
    regions,
)
from abstain.exceptions import ValidationError

from instances import random_classifier


def test_single_boundary_regions():
    r0, r1, ra = regions(Classifier1D((0.0,), (1.0, 2.0)))
    assert [(iv.lo, iv.hi) for iv in r0] == [(-math.inf, 0.0)]
    assert [(iv.lo, iv.hi) for iv in r1] == [(0.0, math.inf)]
    assert [(iv.lo, iv.hi) for iv in ra] == [(-1.0, 2.0)]
    assert r1.contains(0.0) and not r0.contains(0.0)
    assert ra.contains(-1.0) and ra.contains(2.0)


def test_zero_width_abstain_has_no_mass():
    _, _, ra = regions(Classifier1D((0.0, 5.0)))
    assert [(iv.lo, iv.hi) for iv in ra] == [(0.0, 0.0), (5.0, 5.0)]
    assert ra.measure() == 0.0


def test_shifted_edges():
    y = math.log(3)
    _, _, ra = regions(Classifier1D((y,), (0.2, 0.3)))
    (iv,) = ra.intervals
    assert iv.lo == pytest.approx(y - 0.2, abs=1e-15)
    assert iv.hi == pytest.approx(y + 0.3, abs=1e-15)


def test_classify_examples():
    assert classify(Classifier1D((0.0,), (1.0, 1.0)), 0.5) is Label.ABSTAIN
    assert classify(Classifier1D((0.0,)), -3.0) is Label.H0
    assert classify(Classifier1D((0.0, 5.0)), 6.0) is Label.H0
    assert classify(Classifier1D((0.0, 5.0)), 2.0) is Label.H1


def test_classify_vectorised():
    c = Classifier1D((0.0, 5.0), (0.5, 0.5, 0.5, 0.5))
    got = classify(c, [-1.0, -0.5, 1.0, 5.2, 7.0])
    assert got.tolist() == [Label.H0, Label.ABSTAIN, Label.H1, Label.ABSTAIN, Label.H0]


def test_classify_rejects_nonfinite():
    with pytest.raises(ValidationError):
        classify(Classifier1D((0.0,)), float("inf"))


@pytest.mark.parametrize("y, gamma", [
    ((), None),
    ((1.0, 1.0), None),
    ((2.0, 1.0), None),
    ((0.0, float("inf")), None),
    ((0.0,), (1.0,)),
    ((0.0,), (-0.1, 0.0)),
    ((0.0,), (float("nan"), 0.0)),
    ((0.0, 1.0), (0.0, 0.5, 0.5, 0.0)),
    ((0.0, 1.0), (0.0, 0.6, 0.5, 0.0)),
    ((0.0, 1.0), (0.0, float("inf"), 0.0, 0.0)),
])
def test_invalid_classifier(y, gamma):
    with pytest.raises(ValidationError):
        Classifier1D(y, gamma)


def test_outer_halfwidths_may_be_infinite():
    c = Classifier1D((0.0, 1.0), (math.inf, 0.1, 0.1, math.inf))
    assert classify(c, -1e300) is Label.ABSTAIN
    assert classify(c, 0.5) is Label.H1


def test_interval_set_rejects_overlap():
    with pytest.raises(ValidationError):
        IntervalSet((Interval(0, 2), Interval(1, 3)))
    IntervalSet((Interval(0, 1, hi_closed=False), Interval(1, 3)))


def test_partition_and_membership_agree():
    rng = np.random.default_rng(0)
    for _ in range(20):
        c = random_classifier(rng)
        x = rng.uniform(-6, 6, size=5000)
        r0, r1, ra = regions(c)
        in0, in1, ina = r0.contains(x), r1.contains(x), ra.contains(x)
        assert np.all(in0 ^ in1)
        lab = classify(c, x)
        expected = np.where(ina, Label.ABSTAIN, np.where(in1, Label.H1, Label.H0))
        assert np.array_equal(lab, expected)


def test_partition_on_boundaries():
    c = Classifier1D((-1.0, 0.0, 2.0, 3.0))
    r0, r1, _ = regions(c)
    for x in c.y:
        assert bool(r0.contains(x)) != bool(r1.contains(x))
        # a zero-width abstain interval still contains its boundary
        assert classify(c, x) is Label.ABSTAIN


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=8, unique=True), st.floats(-60, 60))
def test_no_abstain_matches_alternation(ys, x):
    y = sorted(ys)
    if any(b - a < 1e-6 for a, b in zip(y, y[1:])):
        return
    c = Classifier1D(tuple(y))
    left_count = sum(1 for v in y if v <= x)
    expected = Label.H1 if left_count % 2 == 1 else Label.H0
    if x in y:
        expected = Label.ABSTAIN
    assert classify(c, x) == expected


def test_slab_examples():
    r = RegionSpecD.slab(3, 1.0)
    assert classify_d(r, (0.5, 9.0, -9.0)) is Label.ABSTAIN
    assert classify_d(r, (-2.0, 0.0, 0.0)) is Label.H0
    assert classify_d(r, (2.0, 0.0, 0.0)) is Label.H1


def test_region_spec_dimension_check():
    with pytest.raises(ValidationError):
        classify_points(RegionSpecD.slab(3, 1.0), np.zeros((4, 2)))


def test_from_classifier_matches_1d():
    rng = np.random.default_rng(4)
    c = random_classifier(rng)
    x = rng.uniform(-6, 6, size=2000)
    assert np.array_equal(classify_points(RegionSpecD.from_classifier(c), x[:, None]), classify(c, x))
