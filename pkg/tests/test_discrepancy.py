import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from equidist.discrepancy import (
    BinnedDiscrepancy,
    Interval,
    count_in_interval,
    extreme_discrepancy,
    extreme_discrepancy_oracle,
    star_discrepancy,
)
from equidist.seqlab import RealSequence, UnitSequence, fractional_parts
from equidist.seqlab.families import float_to_fixed

points = st.lists(st.floats(0.0, 1.0, exclude_max=True, allow_nan=False), min_size=1, max_size=60)
# coarse grids force many ties
tied = st.lists(st.integers(0, 7).map(lambda k: k / 8), min_size=1, max_size=40)


def test_count_in_interval():
    u = UnitSequence([0.1, 0.5, 0.9])
    assert count_in_interval(u, Interval(0.0, 1.0)) == 3
    assert count_in_interval(u, Interval(0.5, 0.9)) == 1
    w = fractional_parts(RealSequence(1, [1.25, 2.25]))
    assert count_in_interval(w, Interval(0.2, 0.3)) == 2


@pytest.mark.parametrize("a,b", [(0.5, 0.5), (-0.1, 0.5), (0.2, 1.1)])
def test_interval_rejects(a, b):
    with pytest.raises(ValueError):
        Interval(a, b)


@pytest.mark.parametrize("u,value", [
    ([0, 0.25, 0.5, 0.75], 0.25),
    ([(3 * j % 5) / 5 for j in range(1, 6)], 0.2),
    ([0.5], 1.0),
    ([0.0, 0.5], 0.5),
])
def test_extreme_examples(u, value):
    assert abs(extreme_discrepancy(u).value - value) < 1e-12
    assert abs(extreme_discrepancy_oracle(u).value - value) < 1e-12


def test_oracle_equispaced():
    for m in (1, 3, 17, 100):
        assert abs(extreme_discrepancy_oracle(np.arange(m) / m).value - 1 / m) < 1e-12


def test_oracle_guard():
    with pytest.raises(ValueError):
        extreme_discrepancy_oracle(np.zeros(20), max_points=10)


def test_empty_and_out_of_range():
    with pytest.raises(ValueError):
        extreme_discrepancy([])
    with pytest.raises(ValueError):
        extreme_discrepancy([1.0])


def test_star_examples():
    assert star_discrepancy([0.25, 0.75]) == 0.25
    assert star_discrepancy([0.5]) == 0.5


@settings(max_examples=200, deadline=None)
@given(st.one_of(points, tied))
def test_fast_equals_oracle(u):
    assert abs(extreme_discrepancy(u).value - extreme_discrepancy_oracle(u).value) < 1e-12


@settings(max_examples=200, deadline=None)
@given(st.one_of(points, tied))
def test_bounds_and_sandwich(u):
    d = extreme_discrepancy(u).value
    s = star_discrepancy(u)
    assert 1 / len(u) - 1e-15 <= d <= 1.0
    assert s <= d + 1e-15 and d <= 2 * s + 1e-15


@settings(max_examples=100, deadline=None)
@given(st.one_of(points, tied))
def test_witness_attains_value(u):
    rep = extreme_discrepancy(u)
    assert abs(rep.witness.local_discrepancy(u) - rep.value) < 1e-12
    orc = extreme_discrepancy_oracle(u)
    assert abs(orc.witness.local_discrepancy(u) - orc.value) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.one_of(points, tied), st.randoms(use_true_random=False))
def test_permutation_invariance(u, rnd):
    v = list(u)
    rnd.shuffle(v)
    assert extreme_discrepancy(v).value == extreme_discrepancy(u).value


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1, exclude_max=True), min_size=1, max_size=40), st.data())
def test_modulo_invariance(x, data):
    shifts = data.draw(st.lists(st.integers(-5, 5), min_size=len(x), max_size=len(x)))
    a = fractional_parts(RealSequence(1, x))
    b = fractional_parts(RealSequence(1, [xi + s for xi, s in zip(x, shifts)]))
    assert abs(extreme_discrepancy(a).value - extreme_discrepancy(b).value) < 1e-12


def test_count_full_interval_is_m():
    u = np.random.default_rng(3).random(57)
    assert count_in_interval(u, Interval(0, 1)) == 57


def test_binned_brackets_exact():
    rng = np.random.default_rng(11)
    u = rng.random(50_000) ** 1.3
    exact = extreme_discrepancy(u).value
    b = BinnedDiscrepancy(bins=1 << 12)
    b.add(float_to_fixed(u))
    lo, hi = b.bounds()
    assert lo <= exact <= hi
    assert hi - lo <= 2 / (1 << 12) + 1e-12


def test_binned_classes_and_merge():
    rng = np.random.default_rng(5)
    u = rng.random(2000)
    labels = np.arange(2000) % 2
    b = BinnedDiscrepancy(classes=2, bins=1 << 10)
    b.add(float_to_fixed(u), labels)
    assert b.sizes().tolist() == [1000, 1000]
    for k in (0, 1):
        exact = extreme_discrepancy(u[labels == k]).value
        lo, hi = b.bounds(k)
        assert lo <= exact <= hi
    assert b.merged().bounds() == b.bounds()
    with pytest.raises(ValueError):
        BinnedDiscrepancy(bins=1000)
