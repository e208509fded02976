import cmath
import math

import mpmath
import numpy as np
import pytest

from equidist.seqlab import RealSequence, generate
from equidist.weyl import weyl_profile, weyl_sum, weyl_sum_spec


def test_resonant_half_steps():
    w = weyl_sum(RealSequence(1, [k / 2 for k in range(1, 101)]), 2)
    assert abs(w.sum - 1) < 1e-12 and w.N == 100


def test_fifth_roots_cancel():
    w = weyl_sum(RealSequence(1, [k / 5 for k in range(1, 6)]), 1)
    assert abs(w.sum) < 1e-12


def test_h_zero_rejected():
    with pytest.raises(ValueError):
        weyl_sum(RealSequence(1, [0.1]), 0)
    with pytest.raises(ValueError):
        weyl_sum_spec("log", 0, 10)


def test_log_magnitude_near_limit():
    w = weyl_sum_spec("log", 1, 10 ** 5)
    assert abs(w.magnitude - 0.157) <= 0.05


def test_against_direct_summation():
    # independent oracle: mpmath terms at 30 digits
    N = 2000
    with mpmath.workdps(30):
        s = mpmath.fsum(mpmath.expj(2 * mpmath.pi * 3 * mpmath.log(k)) for k in range(1, N + 1)) / N
    w = weyl_sum_spec("log", 3, N)
    assert abs(w.sum - complex(s)) < 1e-12


def test_huge_phases_reduced_first():
    # h * x_k ~ 1e14; the closed form keeps the fractional phase
    first = 10 ** 7
    N = 500
    w = weyl_sum_spec("pow:a=2,c=sqrt(2)", 7, N, first=first)
    with mpmath.workdps(60):
        r2 = mpmath.sqrt(2)
        s = mpmath.fsum(mpmath.expj(2 * mpmath.pi * mpmath.frac(7 * r2 * k * k))
                        for k in range(first, first + N)) / N
    assert abs(w.sum - complex(s)) < 1e-12


def test_integer_shift_invariance():
    x = generate("nlog", 1, 5000)
    shifted = RealSequence(1, x.values + np.arange(5000) % 7)
    for h in (1, 2, -3):
        assert abs(weyl_sum(x, h).sum - weyl_sum(shifted, h).sum) < 1e-9


def test_profile_rational_and_conjugates():
    rows = weyl_profile("linear:theta=0.5", 2, [10, 101, 1000])
    assert len(rows) == 4 * 3
    for r in rows:
        assert r.magnitude <= 1.0
        if r.h % 2 == 0:
            assert abs(r.magnitude - 1) < 1e-12
    by = {(r.h, r.N): r.sum for r in rows}
    for (h, n), s in by.items():
        assert abs(s - by[(-h, n)].conjugate()) < 1e-12


def test_profile_rational_divisible_h():
    rows = weyl_profile("linear:theta=2/7", 14, [50], hs=[7, 14, -7])
    assert all(abs(r.magnitude - 1) < 1e-12 for r in rows)


def test_profile_sqrt2_small():
    (row,) = weyl_profile("linear:theta=sqrt(2)", 1, [10 ** 5], hs=[1])
    theta = math.sqrt(2)
    bound = 1 / (10 ** 5 * abs(math.sin(math.pi * theta)))
    assert row.magnitude < 0.01 and row.magnitude <= bound + 1e-12
    geo = cmath.exp(2j * math.pi * theta) * (cmath.exp(2j * math.pi * theta * 10 ** 5) - 1) / (
        cmath.exp(2j * math.pi * theta) - 1) / 10 ** 5
    assert abs(row.magnitude - abs(geo)) < 1e-9


@pytest.mark.parametrize("h_max,grid", [(0, [10]), (1, []), (1, [10, 10]), (1, [0, 5])])
def test_profile_rejects(h_max, grid):
    with pytest.raises(ValueError):
        weyl_profile("log", h_max, grid)
