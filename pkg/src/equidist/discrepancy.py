"""Counting and extreme discrepancy of finite point sets modulo one.

Two exact routes are provided.  ``extreme_discrepancy`` uses the sorted-points
closed form

    D = 1/m + max_i (i/m - u_(i)) - min_i (i/m - u_(i)),

and ``extreme_discrepancy_oracle`` enumerates every candidate interval whose
endpoints sit at a point (included or excluded) or at 0/1.  The oracle is the
reference the closed form is tested against.

For point sets too large to sort, ``BinnedDiscrepancy`` streams fixed-point
fractions into a histogram and brackets the discrepancy between a lower and a
rigorous upper bound.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seqlab.core import UnitSequence


@dataclass(frozen=True)
class Interval:
    """Half-open [a, b) with 0 <= a < b <= 1."""

    a: float
    b: float

    def __post_init__(self):
        if not (0.0 <= self.a < self.b <= 1.0):
            raise ValueError(f"need 0 <= a < b <= 1, got [{self.a}, {self.b})")


@dataclass(frozen=True)
class Witness:
    """Limit interval at which the supremum is reached.

    The supremum is usually not attained by a half-open interval; the witness
    is the limiting interval with each endpoint either included or excluded,
    e.g. ``[0.5, 0.5]`` for the single point 0.5.
    """

    a: float
    b: float
    a_closed: bool
    b_closed: bool

    def local_discrepancy(self, u) -> float:
        v = _points(u)
        left = v >= self.a if self.a_closed else v > self.a
        right = v <= self.b if self.b_closed else v < self.b
        return abs(np.count_nonzero(left & right) / len(v) - (self.b - self.a))


@dataclass(frozen=True)
class DiscrepancyReport:
    value: float
    witness: Witness | None
    method: str  # fast | oracle | binned


def _points(u) -> np.ndarray:
    if isinstance(u, UnitSequence):
        return u.values
    v = np.asarray(u, dtype=np.float64).reshape(-1)
    if len(v) and (v.min() < 0.0 or v.max() >= 1.0):
        raise ValueError("points must lie in [0, 1)")
    return v


def count_in_interval(u, interval: Interval) -> int:
    v = _points(u)
    if len(v) == 0:
        raise ValueError("empty point set")
    return int(np.count_nonzero((v >= interval.a) & (v < interval.b)))


def extreme_discrepancy(u) -> DiscrepancyReport:
    """Exact sup over [a, b) in [0, 1) of |A/m - (b - a)|, in O(m log m)."""
    v = _points(u)
    m = len(v)
    if m == 0:
        raise ValueError("empty point set")
    s = np.sort(v, kind="stable")
    i = np.arange(1, m + 1, dtype=np.float64)
    g = i / m - s
    # the sup side is reached just after the last of a run of ties, the inf side
    # at the first of a run; with ties g is decreasing inside a run, so argmax
    # takes the last index and argmin the first automatically
    hi = int(np.flatnonzero(g == g.max())[-1])
    lo = int(np.flatnonzero(g == g.min())[0])
    value = 1.0 / m + float(g[hi]) - float(g[lo])
    if lo <= hi:
        witness = Witness(float(s[lo]), float(s[hi]), True, True)
    else:
        witness = Witness(float(s[hi]), float(s[lo]), False, False)
    return DiscrepancyReport(min(value, 1.0), witness, "fast")


def extreme_discrepancy_oracle(u, max_points: int = 10_000) -> DiscrepancyReport:
    """Brute-force supremum over all candidate intervals, O(m^2)."""
    v = _points(u)
    m = len(v)
    if m == 0:
        raise ValueError("empty point set")
    if m > max_points:
        raise ValueError(f"oracle limited to {max_points} points (got {m})")
    s = np.sort(v)
    # left endpoints: 0, each point included (a = p), each point excluded (a = p+)
    # right endpoints: 1, each point excluded (b = p), each point included (b = p+)
    a_val = np.concatenate(([0.0], s, s))
    a_cnt = np.concatenate(([0], np.searchsorted(s, s, "left"), np.searchsorted(s, s, "right")))
    a_closed = np.concatenate(([True], np.ones(m, bool), np.zeros(m, bool)))
    b_val = np.concatenate(([1.0], s, s))
    b_cnt = np.concatenate(([m], np.searchsorted(s, s, "left"), np.searchsorted(s, s, "right")))
    b_closed = np.concatenate(([False], np.zeros(m, bool), np.ones(m, bool)))
    best, where = -1.0, None
    step = max(1, 4_000_000 // len(b_val))
    for r0 in range(0, len(a_val), step):
        av, ac = a_val[r0:r0 + step, None], a_cnt[r0:r0 + step, None]
        count = b_cnt[None, :] - ac
        length = b_val[None, :] - av
        ok = (count >= 0) & (length >= 0)
        local = np.where(ok, np.abs(count / m - length), -1.0)
        k = int(np.argmax(local))
        if local.flat[k] > best:
            best = float(local.flat[k])
            ra, cb = divmod(k, len(b_val))
            ia = r0 + ra
            where = (float(a_val[ia]), float(b_val[cb]), bool(a_closed[ia]), bool(b_closed[cb]))
    return DiscrepancyReport(best, Witness(*where), "oracle")


def star_discrepancy(u) -> float:
    """Sup over anchored intervals [0, b)."""
    v = _points(u)
    m = len(v)
    if m == 0:
        raise ValueError("empty point set")
    s = np.sort(v)
    i = np.arange(1, m + 1, dtype=np.float64)
    return float(np.max(np.maximum(i / m - s, s - (i - 1) / m)))


class BinnedDiscrepancy:
    """Streaming two-sided bounds on the extreme discrepancy of many point sets.

    Points are fixed-point fractions (uint64, units of 2**-64) tagged with a
    class label.  With cumulative counts A_i below the bin edges t_i, the
    function G(t) = A([0,t))/m - t satisfies

        A_i/m - t_{i+1} <= G(t) <= A_{i+1}/m - t_i   on [t_i, t_{i+1}),

    so max-min of the grid values is a lower bound and the bracketing
    envelope an upper bound, at most 2/bins apart.
    """

    def __init__(self, classes: int = 1, bins: int = 1 << 16):
        if bins & (bins - 1):
            raise ValueError("bins must be a power of two")
        self.classes = classes
        self.bins = bins
        self._shift = np.uint64(64 - bins.bit_length() + 1)
        self.counts = np.zeros((classes, bins), dtype=np.int64)
        self.position_error = 0.0

    def add(self, fixed: np.ndarray, labels: np.ndarray | int = 0, position_error: float = 0.0):
        b = (np.asarray(fixed, dtype=np.uint64) >> self._shift).astype(np.int64)
        if np.isscalar(labels):
            self.counts[int(labels)] += np.bincount(b, minlength=self.bins)
        else:
            flat = np.asarray(labels, dtype=np.int64) * self.bins + b
            self.counts += np.bincount(flat, minlength=self.classes * self.bins).reshape(
                self.classes, self.bins)
        self.position_error = max(self.position_error, position_error)

    def merged(self) -> BinnedDiscrepancy:
        out = BinnedDiscrepancy(1, self.bins)
        out.counts[0] = self.counts.sum(axis=0)
        out.position_error = self.position_error
        return out

    @staticmethod
    def _bounds(counts: np.ndarray, bins: int) -> tuple[float, float]:
        m = counts.sum()
        if m == 0:
            raise ValueError("no points")
        cum = np.concatenate(([0], np.cumsum(counts))) / m
        t = np.arange(bins + 1) / bins
        grid = cum - t
        lower = float(grid.max() - grid.min())
        upper_env = cum[1:] - t[:-1]
        lower_env = cum[:-1] - t[1:]
        upper = float(max(upper_env.max(), 0.0) - min(lower_env.min(), 0.0))
        return lower, upper

    def bounds(self, label: int | None = None) -> tuple[float, float]:
        """(lower, upper) for one class, or for the union when ``label`` is None.

        The upper bound includes twice the accumulated position error of the
        fixed-point inputs (moving every point by at most e changes the
        discrepancy by at most 2e).
        """
        counts = self.counts.sum(axis=0) if label is None else self.counts[label]
        lo, hi = self._bounds(counts, self.bins)
        pad = 2.0 * self.position_error
        return max(0.0, lo - pad), min(1.0, hi + pad)

    def sizes(self) -> np.ndarray:
        return self.counts.sum(axis=1)
