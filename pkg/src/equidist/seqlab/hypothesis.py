"""Scan for the index n(eps) after which the second-difference window holds.

The window condition at index n is

    1 / (eps**8 * n**2) <= D2 x_n < eps**12,

required for every n > n(eps) > eps**-5.  When D2 x_n is negative on the
scanned range the sequence is negated first (a weakly-increasing second
difference becomes weakly-decreasing), and the report says so.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from gmpy2 import mpq

from .._hp import as_fraction
from .core import MonotonicityProfile, SequenceSpec, _as_spec, monotonicity_profile
from .families import Family, SequenceError

EXHAUSTIVE_LIMIT = 10 ** 7
GEOMETRIC_RATIO = 2.0 ** (1 / 32)
_BLOCK = 1 << 20


class HypothesisViolation(ValueError):
    """The sequence does not satisfy the second-difference window where it is needed."""


@dataclass
class HypothesisReport:
    epsilon: Fraction
    n_epsilon: int | None
    horizon: int
    violations: list[tuple[int, str]] = field(default_factory=list)
    violation_count: int = 0
    orientation: int = 1
    sampling: str = "exhaustive"
    samples: int = 0
    monotonicity: MonotonicityProfile | None = None

    @property
    def negated(self) -> bool:
        return self.orientation < 0


def check_epsilon(epsilon) -> Fraction:
    eps = as_fraction(epsilon)
    if not (0 < eps < Fraction(1, 10)):
        raise ValueError(f"epsilon must satisfy 0 < eps < 1/10, got {float(eps)}")
    return eps


def window_condition(family: Family, n: int, epsilon) -> str | None:
    """None when the window holds at n, otherwise a short reason (exact arithmetic)."""
    eps = as_fraction(epsilon)
    d2 = family.d2(n)
    e8 = mpq(eps.numerator, eps.denominator) ** 8
    if d2 * n * n * e8 < 1:
        return "second difference below 1/(eps^8 n^2)"
    if d2 >= e8 * e8 / mpq(eps.numerator, eps.denominator) ** 4:
        return "second difference not below eps^12"
    return None


def hypothesis_scan(spec: SequenceSpec | str, epsilon, horizon: int, *,
                    exhaustive_limit: int = EXHAUSTIVE_LIMIT,
                    ratio: float = GEOMETRIC_RATIO,
                    max_violations: int = 20) -> HypothesisReport:
    """Find the least n(eps) > eps**-5 after which every sampled n satisfies the window.

    Every n up to ``exhaustive_limit`` is checked; beyond that samples grow
    geometrically by ``ratio`` and the last violation is pinned down by
    bisection against the next passing sample.
    """
    spec = _as_spec(spec)
    eps = check_epsilon(epsilon)
    horizon = int(horizon)
    inv5 = 1 / eps ** 5
    if horizon <= inv5:
        raise ValueError(f"horizon must exceed eps^-5 = {float(inv5):.6g}")
    fam = spec.closed_form
    if fam.last_index is not None and horizon + 2 > fam.last_index:
        raise SequenceError(f"horizon {horizon} needs data up to index {horizon + 2}")

    orientation = 1
    if fam.d2(horizon) < 0:
        fam = fam.negated()
        orientation = -1

    floor5 = math.floor(inv5)
    n_min = floor5 + 2
    e8 = float(eps) ** 8
    e12 = float(eps ** 12)
    recent: deque[tuple[int, str]] = deque(maxlen=max_violations)
    count = 0
    samples = 0
    last_bad: int | None = None
    profile_pts: list[float] = []

    stop = min(horizon, exhaustive_limit)
    for lo in range(n_min, stop + 1, _BLOCK):
        n = np.arange(lo, min(lo + _BLOCK, stop + 1), dtype=np.int64)
        d2 = fam.d2_float(n)
        nf = n.astype(np.float64)
        lower = 1.0 / (e8 * nf * nf)
        bad_lo = d2 < lower
        bad_hi = d2 >= e12
        unsure = (np.abs(d2 - lower) <= 1e-9 * lower) | (np.abs(d2 - e12) <= 1e-9 * e12)
        reasons: dict[int, str | None] = {}
        for k in np.flatnonzero(unsure):
            reasons[int(n[k])] = window_condition(fam, int(n[k]), eps)
        bad = bad_lo | bad_hi
        bad[unsure] = [reasons[int(n[k])] is not None for k in np.flatnonzero(unsure)]
        samples += len(n)
        profile_pts.extend(d2[:: max(1, len(d2) // 64)].tolist())
        idx = np.flatnonzero(bad)
        if len(idx):
            count += len(idx)
            last_bad = int(n[idx[-1]])
            for k in idx[-max_violations:]:
                nk = int(n[k])
                why = reasons.get(nk) or ("second difference below 1/(eps^8 n^2)" if bad_lo[k]
                                          else "second difference not below eps^12")
                recent.append((nk, why))

    sampling = "exhaustive"
    if horizon > stop:
        sampling = "geometric"
        prev_good_after_bad = None
        n = max(stop, n_min - 1)
        pts = []
        while n < horizon:
            n = min(horizon, max(n + 1, int(n * ratio)))
            pts.append(n)
        bad_sample = None
        for n in pts:
            why = window_condition(fam, n, eps)
            samples += 1
            profile_pts.append(float(fam.d2(n)))
            if why is not None:
                count += 1
                recent.append((n, why))
                bad_sample = n
                last_bad = n
                prev_good_after_bad = None
            elif bad_sample is not None and prev_good_after_bad is None:
                prev_good_after_bad = n
        if bad_sample is not None and prev_good_after_bad is not None:
            lo, hi = bad_sample, prev_good_after_bad
            while hi - lo > 1:
                mid = (lo + hi) // 2
                samples += 1
                why = window_condition(fam, mid, eps)
                if why is None:
                    hi = mid
                else:
                    count += 1
                    recent.append((mid, why))
                    lo = mid
            last_bad = lo
            sampling = "geometric+bisection"

    if last_bad is not None and last_bad >= horizon:
        n_eps = None
    else:
        n_eps = max(floor5 + 1, last_bad or 0)
    prof = None
    if len(profile_pts) >= 2:
        prof = monotonicity_profile(np.array(profile_pts))
    return HypothesisReport(eps, n_eps, horizon, sorted(recent), count, orientation,
                            sampling, samples, prof)
