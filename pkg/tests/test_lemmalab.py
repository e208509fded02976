import math

import numpy as np
import pytest

from equidist import lemmalab as ll
from equidist.lemmalab import (
    LemmaCheck,
    RejectedInstance,
    check_block_aggregation,
    check_chebyshev,
    check_counting_bound,
    check_discrepancy_bound_L1,
    check_discrepancy_bound_L5,
    check_interval_comparison,
    check_length_lower_bound,
    check_merge,
    check_perturbation,
    run_instance,
    run_suite,
)
from equidist.seqlab import RealSequence


def test_verdict_tolerance():
    assert ll.verdict("L3", 1.0 + 5e-10, 1.0, "d").passed
    assert not ll.verdict("L3", 1.0 + 5e-9, 1.0, "d").passed
    c = ll.verdict("L3", 1.0, 2.0, "d")
    assert c.margin == 1.0 and c.as_dict()["pass"] is True


# -- L3 ----------------------------------------------------------------------------

def test_L3_example():
    c = check_counting_bound([1, 2, 4, 7, 11], 1, 7)
    assert c.lhs == 4 and abs(c.rhs - (math.sqrt(12) + 2)) < 1e-12 and c.passed


def test_L3_two_points_trivial():
    c = check_counting_bound([0, 1, 3, 6, 10], 2, 6)
    assert c.lhs <= 2 and c.passed


def test_L3_rejects():
    with pytest.raises(RejectedInstance):
        check_counting_bound([0, 1, 0, 1], 0, 1)
    with pytest.raises(RejectedInstance):
        check_counting_bound([0, 1, 2, 3], 0, 3)  # D2 = 0
    with pytest.raises(RejectedInstance):
        check_counting_bound([1, 2, 4], 3, 1)


# -- L6 ----------------------------------------------------------------------------

@pytest.mark.parametrize("m", [3, 10, 100])
def test_L6_progression(m):
    c = check_length_lower_bound(np.arange(m, dtype=float))
    assert abs(c.lhs - math.sqrt(2 * (m - 1))) < 1e-12 and c.rhs == m and c.passed


def test_L6_near_tight():
    m = 50
    y = np.arange(m, dtype=float) ** 2 / 2 * 1e-3
    c = check_length_lower_bound(y)
    assert c.passed and c.margin >= 0 and c.margin < m


def test_L6_degenerate():
    with pytest.raises(RejectedInstance):
        check_length_lower_bound([1.0, 1.0, 1.0])


# -- L7 ----------------------------------------------------------------------------

def test_L7_trivial_when_I_has_one_point():
    y = np.arange(1, 10, dtype=float) ** 2
    c = check_interval_comparison(y, (1, 2), (80, 82))
    assert c.lhs == 0 and c.passed


def test_L7_squares_unit_intervals():
    y = np.arange(1, 30, dtype=float) ** 2
    c = check_interval_comparison(y, (4, 5), (9, 10))
    assert (c.lhs, c.rhs) == (0.0, 2.0) and c.passed


def test_L7_rejects_not_ordered():
    y = np.arange(1, 10, dtype=float) ** 2
    with pytest.raises(RejectedInstance):
        check_interval_comparison(y, (9, 20), (4, 5))


# -- L5 ----------------------------------------------------------------------------

def test_L5_progression():
    m = 8
    y = np.arange(m) / m
    c = check_discrepancy_bound_L5(y)
    assert abs(c.lhs - 1 / m) < 1e-12 and c.rhs >= 2 and c.passed
    r = check_discrepancy_bound_L5(y, remark=True)
    assert r.passed and r.note == "remark form"


def test_L5_m2():
    c = check_discrepancy_bound_L5([0.1, 0.7])
    assert c.passed and abs(c.lhs - 0.6) < 1e-12


# -- L1 ----------------------------------------------------------------------------

def test_L1_quadratic_ratio_recorded():
    y = 1e-3 * np.arange(1, 400, dtype=float) ** 2
    c = check_discrepancy_bound_L1(y, 1.0)
    assert c.ratio is not None and math.isfinite(c.ratio) and c.passed


def test_L1_small_spread_trivial():
    y = np.array([0.0, 0.1, 0.3, 0.6])
    c = check_discrepancy_bound_L1(y, 1.0)
    assert c.rhs / 10 > 1 >= c.lhs and c.passed


def test_L1_rejects():
    with pytest.raises(RejectedInstance):
        check_discrepancy_bound_L1([0, 1], 1.0)
    with pytest.raises(RejectedInstance):
        check_discrepancy_bound_L1([0, 1, 3, 4, 9], 1.0)  # D2 = 1, -1, 4


# -- L2 ----------------------------------------------------------------------------

def test_L2_identity():
    x = np.random.default_rng(1).random(30)
    c = check_perturbation(x, x, 0.01)
    assert c.passed and c.margin >= 0.02 - 1e-12


def test_L2_noise_and_vacuous():
    rng = np.random.default_rng(2)
    x = np.arange(50) / 50
    y = x + rng.uniform(-0.01, 0.01, 50)
    assert check_perturbation(x, y, 0.0101).passed
    assert check_perturbation(x, rng.random(50), 1.0).rhs >= 1


def test_L2_length_mismatch():
    with pytest.raises(ValueError):
        check_perturbation([0.1], [0.1, 0.2], 0.1)


# -- L8 ----------------------------------------------------------------------------

def test_L8_single_part_equality():
    x = np.random.default_rng(4).random(20)
    c = check_merge([x])
    assert abs(c.lhs - (c.rhs - 1e-12)) < 1e-15 and c.passed


def test_L8_coprime_grids():
    c = check_merge([np.arange(7) / 7, np.arange(11) / 11])
    assert c.passed and abs(c.rhs - 1 / 7 - 1e-12) < 1e-15


# -- L4 ----------------------------------------------------------------------------

def test_L4_single_block():
    k = np.arange(1, 2001, dtype=float)
    x = RealSequence(1, k * math.sqrt(2))
    c = check_block_aggregation(x, 0.5, [1000, 1500])
    assert c.passed


def test_L4_rotation_blocks():
    k = np.arange(1, 6001, dtype=float)
    x = RealSequence(1, k * (math.sqrt(5) - 1) / 2)
    cuts = [3000, 3500, 4000, 4500, 5000, 5500, 6000]
    c = check_block_aggregation(x, 0.2, cuts)
    assert c.passed
    assert abs(c.rhs - ll.block_aggregation_bound(0.2, 3000, 6000, 500)) < 1e-15


def test_L4_rejects_long_block_and_bad_block():
    x = RealSequence(1, np.arange(1, 101) * 0.5)
    with pytest.raises(RejectedInstance):
        check_block_aggregation(x, 0.1, [50, 80])
    with pytest.raises(RejectedInstance):
        check_block_aggregation(x, 0.4, [60, 80])  # a period-2 block has D = 1/2
    with pytest.raises(RejectedInstance):
        check_block_aggregation(x, 0.5, [60, 101])


# -- Chebyshev ---------------------------------------------------------------------

def test_chebyshev_examples():
    c = check_chebyshev([3, 2, 1], [6, 5, 4])
    assert (c.lhs, round(c.rhs)) == (90.0, 96) and c.passed
    e = check_chebyshev([2, 2, 2], [5, 5, 5])
    assert e.lhs == 90 and abs(e.margin) < 1e-9 and e.passed
    with pytest.raises(RejectedInstance):
        check_chebyshev([1, 2], [2, 1])


# -- suites ------------------------------------------------------------------------

@pytest.mark.parametrize("lemma", ll.LEMMA_IDS)
def test_small_suites_clean(lemma):
    rep = run_suite(lemma, 150, 7)
    assert rep.ok and rep.failed == 0 and rep.accepted == 150


def test_suite_threads_identical():
    a = run_suite("L8", 300, 9, threads=1)
    b = run_suite("L8", 300, 9, threads=4)
    assert a.as_dict() == b.as_dict()


def test_instances_reproducible():
    for lemma in ll.LEMMA_IDS:
        for i in range(5):
            a, b = run_instance(lemma, 3, i), run_instance(lemma, 3, i)
            assert a == b
            assert a is None or isinstance(a, LemmaCheck)


def test_unknown_lemma():
    with pytest.raises(ValueError):
        run_suite("L9", 1, 0)
