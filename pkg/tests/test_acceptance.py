"""Acceptance criteria 1-7; each test records one PASS/FAIL line for the summary."""
import math
import time

import mpmath
import numpy as np
import pytest
from conftest import POW_START, QUAD_EPS, QUAD_N, record

from equidist.certifier import certify_range, fractional_block
from equidist.diophantine import convergents, select_convergent
from equidist.discrepancy import extreme_discrepancy, extreme_discrepancy_oracle
from equidist.lemmalab import check_block_aggregation, run_suite
from equidist.seqlab import RealSequence, generate_fractional, parse_spec
from equidist.weyl import weyl_sum_spec


def test_criterion_1_residue_systems():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    pairs = {(1, 1), (3, 5), (1, 997)}
    while len(pairs) < 50:
        q = int(rng.integers(1, 998))
        p = int(rng.integers(0, 10 * q + 1))
        if math.gcd(p, q) == 1:
            pairs.add((p, q))
    worst = 0.0
    for p, q in sorted(pairs):
        z = (np.arange(1, q + 1, dtype=np.int64) * p % q) / q
        worst = max(worst, abs(extreme_discrepancy(z).value - 1 / q))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 5
    record(1, ok, f"50 pairs, max |D - 1/q| = {worst:.2e}, {dt:.2f} s")
    assert worst <= 1e-12
    assert dt < 5


def test_criterion_2_oracle_equivalence():
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(1000):
        rng = np.random.default_rng([2024, i])
        m = int(rng.integers(1, 201))
        if i % 4 == 0:  # many ties
            u = rng.integers(0, max(2, m // 3), m) / max(2, m // 3)
        else:
            u = rng.random(m)
        worst = max(worst, abs(extreme_discrepancy(u).value - extreme_discrepancy_oracle(u).value))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-12 and dt < 30
    record(2, ok, f"1000 instances, max |fast - oracle| = {worst:.2e}, {dt:.1f} s")
    assert worst <= 1e-12
    assert dt < 30


SUITES = ("L3", "L5", "L6", "L7", "L1", "L2", "L8", "Chebyshev")


@pytest.mark.slow
def test_criterion_3_lemma_suites():
    t0 = time.perf_counter()
    bad, l1_ratio = [], 0.0
    for seed in (42, 43, 44):
        for lemma in SUITES:
            rep = run_suite(lemma, 10_000, seed)
            if not (rep.accepted == 10_000 and rep.failed == 0):
                bad.append(f"{lemma}/{seed}: accepted={rep.accepted} failed={rep.failed}")
            if lemma == "L1":
                l1_ratio = max(l1_ratio, rep.max_ratio)
    dt = time.perf_counter() - t0
    ok = not bad and l1_ratio <= 10 and dt < 300
    record(3, ok, f"8 suites x 3 seeds x 1e4, failed=0: {not bad}, L1 max ratio {l1_ratio:.3f}, "
                  f"{dt:.0f} s")
    assert not bad, bad
    assert l1_ratio <= 10
    assert dt < 300


def test_criterion_4_equidistributed(golden):
    g = golden["criterion_4"]
    d_sqrt2 = extreme_discrepancy(generate_fractional("linear:theta=sqrt(2)", 1, 10 ** 4)).value
    d_pow = extreme_discrepancy(generate_fractional("pow:a=1.5", 1, 10 ** 5)).value
    ok = (d_sqrt2 < g["threshold_sqrt2"] and d_pow < g["threshold_pow"]
          and abs(d_sqrt2 - g["sqrt2_N1e4_D"]) < 1e-12 and abs(d_pow - g["pow1.5_N1e5_D"]) < 1e-12)
    record(4, ok, f"D(n sqrt2, 1e4) = {d_sqrt2:.6g} < 0.02, D(n^1.5, 1e5) = {d_pow:.6g} < 0.05")
    assert d_sqrt2 < 0.02 and d_pow < 0.05
    assert d_sqrt2 == pytest.approx(g["sqrt2_N1e4_D"], abs=1e-12)
    assert d_pow == pytest.approx(g["pow1.5_N1e5_D"], abs=1e-12)


def test_criterion_5_log_counterexample(golden):
    g = golden["criterion_5"]
    ds = {}
    for n in (10 ** 3, 10 ** 4, 10 ** 5, 10 ** 6):
        ds[n] = extreme_discrepancy(generate_fractional("log", 1, n)).value
    w = weyl_sum_spec("log", 1, 10 ** 6).magnitude
    ok = all(d > 0.1 for d in ds.values()) and 0.10 <= w <= 0.25
    record(5, ok, "D_N(log n) = " + ", ".join(f"{d:.4f}" for d in ds.values())
           + f" > 0.1; |S_1e6(1)| = {w:.6f} in [0.10, 0.25]")
    assert all(d > 0.1 for d in ds.values())
    for n, d in ds.items():
        assert d == pytest.approx(g["log_D"][str(n)], abs=1e-9)
    assert 0.10 <= w <= 0.25
    assert w == pytest.approx(g["weyl_N1e6"], abs=1e-9)
    assert abs(w - g["weyl_limit"]) < 1e-3


def test_criterion_6_end_to_end(golden, quad_segment):
    g = golden["criterion_6"]
    eps = g["epsilon"]
    start, end = int(g["n_start"]), int(g["n_end"])
    assert start == POW_START
    t0 = time.perf_counter()
    run = certify_range("pow:a=1.5", eps, start, end, threads=4)
    segs = run.segments
    ratios_ok = all(s.bound_ratio <= 10 for s in segs)
    case2 = [s for s in segs if s.case.startswith("case2")]
    cover_ok = all(s.q * s.m <= 2 * s.n * eps for s in case2)
    hmono_ok = all(s.checks["h_monotone"] for s in case2)

    # aggregation on the emitted cutpoints, from independently generated fractional parts
    cuts = run.cutpoints()
    fx, _ = fractional_block(parse_spec("pow:a=1.5").closed_form, cuts[0] + 1, cuts[-1] - cuts[0])
    x = RealSequence(cuts[0] + 1, np.asarray(fx, dtype=np.uint64).astype(np.float64) * 2.0 ** -64)
    agg = check_block_aggregation(x, eps, cuts)
    dt = time.perf_counter() - t0

    # no Case-2 segment occurs on this window; its checks run on the quadratic fixture
    fx_ok = (quad_segment.case.startswith("case2") and quad_segment.checks["h_monotone"]
             and quad_segment.covered <= 2 * QUAD_N * QUAD_EPS)
    golden_ok = (run.case_counts() == g["case_counts"] and len(segs) == g["segments"]
                 and np.allclose([s.bound_ratio for s in segs], g["bound_ratios"], rtol=0, atol=1e-12))
    ok = (len(segs) >= 20 and ratios_ok and cover_ok and hmono_ok and agg.passed
          and run.aggregation.passed and fx_ok and golden_ok and dt < 600)
    record(6, ok, f"{len(segs)} segments {run.case_counts()}, max ratio "
                  f"{max(s.bound_ratio for s in segs):.2e}, aggregation D={agg.lhs:.3g} <= "
                  f"{agg.rhs:.3g}, case-2 fixture {quad_segment.case}, {dt:.1f} s")
    assert len(segs) >= 20
    assert ratios_ok and cover_ok and hmono_ok
    assert agg.passed and run.aggregation.passed
    assert fx_ok
    assert golden_ok
    assert dt < 600


def _random_irrationals(count=100, seed=7):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        b = int(rng.integers(2, 10 ** 6))
        if math.isqrt(b) ** 2 == b:
            continue
        a = int(rng.integers(-50, 51))
        c = int(rng.integers(1, 100))
        out.append((a, b, c))
    return out


def test_criterion_7_convergents():
    thetas = [("sqrt(2)", lambda: mpmath.sqrt(2)),
              ("(1+sqrt(5))/2", lambda: (1 + mpmath.sqrt(5)) / 2)]
    for a, b, c in _random_irrationals():
        thetas.append((f"({a}+sqrt({b}))/{c}", lambda a=a, b=b, c=c: (a + mpmath.sqrt(b)) / c))
    checked, bad = 0, []
    for text, ref in thetas:
        conv = convergents(text, 10 ** 15)
        with mpmath.workdps(120):
            theta = ref()
            for k in conv:
                checked += 1
                err = abs(theta - mpmath.mpf(k.p) / k.q)
                if math.gcd(k.p, k.q) != 1 or k.q_next is None or err * k.q * k.q_next > 1:
                    bad.append((text, k.p, k.q))
    s = select_convergent("sqrt(2)", 0.1)
    exact = (s.p, s.q, s.q_next) == (8119, 5741, 13860)
    ok = not bad and exact
    record(7, ok, f"{len(thetas)} irrationals, {checked} convergents certified; "
                  f"select_convergent(sqrt 2, 0.1) = ({s.p}, {s.q}, {s.q_next})")
    assert not bad, bad[:5]
    assert exact
