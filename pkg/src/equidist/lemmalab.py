"""Executable checks of the quantitative lemmas behind the certifier.

Each ``check_*`` evaluates both sides of one inequality on a concrete
instance and returns a :class:`LemmaCheck`.  Instances outside a lemma's
hypotheses raise :class:`RejectedInstance`; suites count those separately and
never as failures.

Suites draw random instances from hypothesis-respecting generators:

* convex sequences as cumulative sums of positive, increasing first
  differences (log-uniform scales), optionally mirrored,
* weakly-decreasing second differences as a decreasing envelope times
  factors in [K**-1/2, K**1/2].
"""
from __future__ import annotations

import hashlib
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .discrepancy import extreme_discrepancy, extreme_discrepancy_oracle
from .seqlab.core import RealSequence, monotonicity_profile

REL_TOL = 1e-9
ORACLE_MAX = 1000
SUITE_ORACLE_MAX = 48
LEMMA_IDS = ("L3", "L5", "L6", "L7", "L1", "L2", "L4", "L8", "Chebyshev")
_CODES = {name: i + 1 for i, name in enumerate(LEMMA_IDS)}


class RejectedInstance(ValueError):
    """The instance does not satisfy the lemma's hypotheses."""


@dataclass(frozen=True)
class LemmaCheck:
    lemma_id: str
    lhs: float
    rhs: float
    margin: float
    passed: bool
    instance_digest: str
    ratio: float | None = None
    note: str = ""

    def as_dict(self) -> dict:
        out = {"lemma_id": self.lemma_id, "lhs": self.lhs, "rhs": self.rhs,
               "margin": self.margin, "pass": self.passed,
               "instance_digest": self.instance_digest}
        if self.ratio is not None:
            out["ratio"] = self.ratio
        if self.note:
            out["note"] = self.note
        return out


def verdict(lemma_id: str, lhs: float, rhs: float, digest: str, *,
            ratio: float | None = None, note: str = "") -> LemmaCheck:
    lhs, rhs = float(lhs), float(rhs)
    margin = rhs - lhs
    ok = margin >= -REL_TOL * max(1.0, abs(rhs))
    return LemmaCheck(lemma_id, lhs, rhs, margin, bool(ok), digest, ratio, note)


def digest_of(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        if isinstance(p, RealSequence):
            h.update(str(p.start_index).encode())
            p = p.values
        if isinstance(p, np.ndarray):
            h.update(np.ascontiguousarray(p, dtype=np.float64).tobytes())
        else:
            h.update(repr(p).encode())
        h.update(b"|")
    return h.hexdigest()[:16]


def _arr(y) -> np.ndarray:
    if isinstance(y, RealSequence):
        return y.values
    v = np.asarray(y, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError("values must be finite")
    return v


def _frac(v: np.ndarray) -> np.ndarray:
    u = v - np.floor(v)
    return np.where(u >= 1.0, np.nextafter(1.0, 0.0), u)


def discrepancy_of(y, oracle_max: int = ORACLE_MAX) -> float:
    """Extreme discrepancy of the fractional parts; oracle path for small sets."""
    u = _frac(_arr(y))
    if len(u) <= oracle_max:
        return extreme_discrepancy_oracle(u).value
    return extreme_discrepancy(u).value


def _monotone(d: np.ndarray) -> int:
    """+1 nondecreasing, -1 nonincreasing, 0 neither (empty counts as both)."""
    if len(d) == 0 or np.all(d >= 0):
        return 1
    if np.all(d <= 0):
        return -1
    return 0


def _require_l3(v: np.ndarray) -> None:
    d1 = np.diff(v)
    if _monotone(d1) == 0:
        raise RejectedInstance("sequence is not monotone")
    if _monotone(np.diff(d1)) == 0:
        raise RejectedInstance("first differences are not monotone")


def _count_mod_one_units(v: np.ndarray) -> int:
    """max over integers j of #(Y intersect [j, j+1))."""
    _, counts = np.unique(np.floor(v), return_counts=True)
    return int(counts.max())


# -- individual checks ---------------------------------------------------------

def check_counting_bound(y, a: float, b: float, *, digest: str | None = None) -> LemmaCheck:
    """#(Y in [a, b]) <= sqrt(2 (b - a) / min |D2 y|) + 2."""
    v = _arr(y)
    if a > b:
        raise RejectedInstance("need a <= b")
    if len(v) < 3:
        raise RejectedInstance("need at least three terms")
    _require_l3(v)
    d2 = np.abs(np.diff(v, 2))
    if d2.min() <= 0:
        raise RejectedInstance("min |D2 y| must be positive")
    lhs = int(np.count_nonzero((v >= a) & (v <= b)))
    rhs = math.sqrt(2.0 * (b - a) / d2.min()) + 2.0
    return verdict("L3", lhs, rhs, digest or digest_of("L3", v, a, b))


def check_length_lower_bound(y, *, digest: str | None = None) -> LemmaCheck:
    """m >= sqrt(2 |y_m - y_1| / max(max |D2 y|, min |D y|))."""
    v = _arr(y)
    if len(v) < 2:
        raise RejectedInstance("need at least two terms")
    _require_l3(v)
    d1 = np.abs(np.diff(v))
    d2 = np.abs(np.diff(v, 2))
    den = max(float(d2.max()) if len(d2) else 0.0, float(d1.min()))
    if den <= 0:
        raise RejectedInstance("degenerate denominator")
    lhs = math.sqrt(2.0 * abs(v[-1] - v[0]) / den)
    return verdict("L6", lhs, len(v), digest or digest_of("L6", v))


def check_interval_comparison(y, J: tuple[float, float], I: tuple[float, float], *,
                              digest: str | None = None) -> LemmaCheck:
    """(#(Y in I) - 1)/|I| <= (#(Y in J) + 1)/|J| for J = [a, b) left of I = [c, d)."""
    v = _arr(y)
    (a, b), (c, d) = J, I
    if len(v) < 2:
        raise RejectedInstance("need at least two terms")
    d1 = np.diff(v)
    if np.any(d1 <= 0) or np.any(np.diff(d1) <= 0):
        raise RejectedInstance("y and D y must be increasing")
    if not (a < b <= c < d):
        raise RejectedInstance("need a < b <= c < d")
    if a < v[0] or b > v[-1]:
        raise RejectedInstance("J must lie in [y_1, y_m)")
    n_i = int(np.count_nonzero((v >= c) & (v < d)))
    n_j = int(np.count_nonzero((v >= a) & (v < b)))
    lhs = (n_i - 1) / (d - c)
    rhs = (n_j + 1) / (b - a)
    return verdict("L7", lhs, rhs, digest or digest_of("L7", v, J, I))


def check_discrepancy_bound_L5(y, *, remark: bool = False, digest: str | None = None,
                               oracle_max: int = ORACLE_MAX) -> LemmaCheck:
    """D(Y) <= 2 (|y_m - y_1|/m + max_j #(Y in [j, j+1))/m).

    With ``remark=True`` the spread term is replaced by max |D y|.
    """
    v = _arr(y)
    m = len(v)
    if m < 2:
        raise RejectedInstance("need m >= 2")
    _require_l3(v)
    spread = float(np.abs(np.diff(v)).max()) if remark else abs(v[-1] - v[0]) / m
    rhs = 2.0 * (spread + _count_mod_one_units(v) / m)
    lhs = discrepancy_of(v, oracle_max)
    return verdict("L5", lhs, rhs, digest or digest_of("L5", v, remark),
                   note="remark form" if remark else "")


def check_discrepancy_bound_L1(y, K: float, C: float = 10.0, *, digest: str | None = None,
                               oracle_max: int = ORACLE_MAX) -> LemmaCheck:
    """D(Y) <= C ((y_m - y_1)/m + K / sqrt(y_m - y_1)); the ratio to the core is reported."""
    v = _arr(y)
    m = len(v)
    if m < 3:
        raise RejectedInstance("need m >= 3")
    if np.any(np.diff(v) <= 0):
        raise RejectedInstance("y must be increasing")
    d2 = np.diff(v, 2)
    if np.any(d2 < 0):
        raise RejectedInstance("D2 y must be nonnegative")
    k_seen = 1.0
    if len(d2) >= 2:
        prof = monotonicity_profile(d2)
        k_seen = prof.constant_K if prof.kind == "weakly_decreasing" else None
    if k_seen is None or k_seen > K * (1 + REL_TOL):
        raise RejectedInstance("D2 y is not weakly decreasing with the given constant")
    spread = float(v[-1] - v[0])
    core = spread / m + K / math.sqrt(spread)
    lhs = discrepancy_of(v, oracle_max)
    return verdict("L1", lhs, C * core, digest or digest_of("L1", v, K, C), ratio=lhs / core)


def check_perturbation(x, y, eps: float, *, digest: str | None = None,
                       oracle_max: int = ORACLE_MAX) -> LemmaCheck:
    """D(Y) <= D(X) + 2 eps whenever |x_k - y_k| < eps."""
    xv, yv = _arr(x), _arr(y)
    if len(xv) != len(yv):
        raise ValueError("length mismatch")
    if len(xv) == 0:
        raise RejectedInstance("empty sequences")
    if not np.max(np.abs(xv - yv)) < eps:
        raise RejectedInstance("perturbation not below eps")
    lhs = discrepancy_of(yv, oracle_max)
    rhs = discrepancy_of(xv, oracle_max) + 2.0 * eps + 1e-12
    return verdict("L2", lhs, rhs, digest or digest_of("L2", xv, yv, eps))


def check_merge(parts: Sequence, *, digest: str | None = None,
                oracle_max: int = ORACLE_MAX) -> LemmaCheck:
    """D(any ordering of the union) <= max_k D(part_k)."""
    arrs = [_arr(p) for p in parts]
    if not arrs or any(len(a) == 0 for a in arrs):
        raise RejectedInstance("parts must be nonempty")
    lhs = discrepancy_of(np.concatenate(arrs), oracle_max)
    rhs = max(discrepancy_of(a, oracle_max) for a in arrs) + 1e-12
    return verdict("L8", lhs, rhs, digest or digest_of("L8", *arrs))


def block_aggregation_bound(eps: float, head: int, total: int, last_block: int) -> float:
    return 2.0 * eps + head / total + last_block / total + 1e-9


def check_block_aggregation(x: RealSequence, eps: float, cutpoints: Sequence[int], *,
                            digest: str | None = None,
                            oracle_max: int = ORACLE_MAX) -> LemmaCheck:
    """Finite-scale aggregation of eps-blocks.

    ``cutpoints`` are absolute indices n_0 < n_1 < ... < n_M in the index
    frame of ``x``; block j is n_j < k <= n_{j+1}.  The prefix runs from
    ``x.start_index`` to N = n_M, and the bound is

        D(prefix) <= 2 eps + H/P + (n_M - n_{M-1})/P

    with P the prefix length and H the number of prefix terms before the
    first block.
    """
    if not isinstance(x, RealSequence):
        x = RealSequence(1, x)
    cuts = [int(c) for c in cutpoints]
    if len(cuts) < 2:
        raise RejectedInstance("need at least one block")
    s0 = x.start_index
    if cuts[0] < s0 - 1 or cuts[-1] > x.stop_index:
        raise RejectedInstance("cutpoints outside the sequence")
    for lo, hi in zip(cuts, cuts[1:]):
        if not lo < hi:
            raise RejectedInstance("cutpoints must increase")
        if hi > (1 + eps) * lo + 1e-9 * lo:
            raise RejectedInstance(f"block ({lo}, {hi}] longer than eps * {lo}")
    v = x.values
    for lo, hi in zip(cuts, cuts[1:]):
        d = discrepancy_of(v[lo + 1 - s0: hi + 1 - s0], oracle_max)
        if d > eps * (1 + REL_TOL):
            raise RejectedInstance(f"block ({lo}, {hi}] has discrepancy {d:.6g} > eps")
    total = cuts[-1] - s0 + 1
    head = cuts[0] - s0 + 1
    lhs = discrepancy_of(v[: total], oracle_max)
    rhs = block_aggregation_bound(eps, head, total, cuts[-1] - cuts[-2])
    return verdict("L4", lhs, rhs, digest or digest_of("L4", x, eps, cuts))


def check_chebyshev(a, b, *, digest: str | None = None) -> LemmaCheck:
    """sum a * sum b <= n * sum a_k b_k for positive decreasing a, b."""
    av, bv = _arr(a), _arr(b)
    if len(av) != len(bv) or len(av) == 0:
        raise RejectedInstance("need equal nonzero lengths")
    if np.any(av <= 0) or np.any(bv <= 0):
        raise RejectedInstance("terms must be positive")
    if np.any(np.diff(av) > 0) or np.any(np.diff(bv) > 0):
        raise RejectedInstance("sequences must be decreasing")
    n = len(av)
    lhs = math.fsum(av) * math.fsum(bv)
    rhs = n * math.fsum(av * bv)
    rhs += 1e-12 * max(1.0, abs(rhs))
    return verdict("Chebyshev", lhs, rhs, digest or digest_of("Chebyshev", av, bv))


# -- random instances ------------------------------------------------------------

def _log_uniform(rng: np.random.Generator, lo: float, hi: float, size=None):
    return np.exp(rng.uniform(math.log(lo), math.log(hi), size))


def _size(rng: np.random.Generator, lo: int, hi: int) -> int:
    return int(round(_log_uniform(rng, lo, hi + 0.499)))


def random_convex(rng: np.random.Generator, m: int, *, span: tuple[float, float] = (0.05, 200.0),
                  mirror: bool = True) -> np.ndarray:
    """y with y and D y monotone: increasing positive D y, then optional mirror/negation."""
    d2 = np.sort(_log_uniform(rng, 1e-6, 1.0, m - 2))[:: rng.choice([-1, 1])] if m > 2 else np.empty(0)
    d1 = np.concatenate(([_log_uniform(rng, 1e-4, 1.0)], _log_uniform(rng, 1e-4, 1.0) * d2))
    d1 = np.cumsum(d1)
    target = _log_uniform(rng, *span)
    d1 *= target / d1.sum()
    y = np.concatenate(([rng.uniform(-3.0, 3.0)], d1)).cumsum()
    if mirror:
        flip = rng.integers(4)
        if flip & 1:
            y = -y
        if flip & 2:
            y = y[::-1].copy()
    return y


def random_weakly_decreasing_d2(rng: np.random.Generator, m: int, K: float) -> np.ndarray:
    """Increasing y whose second differences are weakly decreasing with constant <= K."""
    env = np.sort(_log_uniform(rng, 1e-5, 1.0, m - 2))[::-1] * _log_uniform(rng, 1e-4, 1.0)
    d2 = env * np.exp(rng.uniform(-0.5, 0.5, m - 2) * math.log(K))
    d1 = np.concatenate(([_log_uniform(rng, 1e-5, 0.5)], d2)).cumsum()
    return np.concatenate(([rng.uniform(0.0, 1.0)], d1)).cumsum()


def _inst_L3(rng, oracle_max):
    y = random_convex(rng, _size(rng, 3, 200))
    lo, hi = float(y.min()), float(y.max())
    pick = rng.integers(3)
    if pick == 0:
        a, b = np.sort(rng.choice(y, 2, replace=False))
    elif pick == 1:
        a, b = np.sort(rng.uniform(lo, hi, 2))
    else:
        a = float(rng.choice(y))
        b = a + _log_uniform(rng, 1e-3, max(hi - lo, 2e-3))
    return check_counting_bound(y, float(a), float(b))


def _inst_L6(rng, oracle_max):
    y = random_convex(rng, _size(rng, 2, 200))
    return check_length_lower_bound(y)


def _inst_L7(rng, oracle_max):
    y = random_convex(rng, _size(rng, 3, 200), mirror=False)
    lo, hi = float(y[0]), float(y[-1])
    a, b, c = np.sort(rng.uniform(lo, hi, 3))
    if rng.integers(2):
        a = float(rng.choice(y[:-1]))
        b = max(b, a + 1e-9)
    d = c + _log_uniform(rng, 1e-3, max(hi - c, 1e-3) * 1.5)
    return check_interval_comparison(y, (float(a), float(b)), (float(c), float(d)))


def _inst_L5(rng, oracle_max):
    y = random_convex(rng, _size(rng, 2, 200), span=(0.05, 60.0))
    c1 = check_discrepancy_bound_L5(y, oracle_max=oracle_max)
    c2 = check_discrepancy_bound_L5(y, remark=True, oracle_max=oracle_max)
    return c1 if not c1.passed or c1.margin <= c2.margin else c2


def _inst_L1(rng, oracle_max):
    K = float(rng.uniform(1.0, 4.0))
    y = random_weakly_decreasing_d2(rng, _size(rng, 3, 200), K)
    return check_discrepancy_bound_L1(y, K, oracle_max=oracle_max)


def _inst_L2(rng, oracle_max):
    m = _size(rng, 1, 200)
    eps = float(_log_uniform(rng, 1e-4, 0.6))
    if rng.integers(2):
        x = random_convex(rng, max(m, 2), span=(0.05, 60.0))
    else:
        x = rng.uniform(0.0, 1.0, m)
    y = x + rng.uniform(-1.0, 1.0, len(x)) * eps * 0.999
    return check_perturbation(x, y, eps, oracle_max=oracle_max)


def _inst_L8(rng, oracle_max):
    parts = []
    for _ in range(int(rng.integers(1, 6))):
        m = _size(rng, 1, 60)
        kind = rng.integers(3)
        if kind == 0:
            parts.append(rng.uniform(0.0, 1.0, m))
        elif kind == 1:
            parts.append((np.arange(m) + rng.uniform()) / m)
        else:
            parts.append(random_convex(rng, max(m, 2), span=(0.05, 20.0)))
    if rng.integers(2):
        flat = np.concatenate(parts)
        rng.shuffle(flat)
        cuts = np.cumsum([len(p) for p in parts])[:-1]
        parts = np.split(flat, cuts)
    return check_merge(parts, oracle_max=oracle_max)


def _inst_L4(rng, oracle_max):
    eps = float(rng.uniform(0.1, 0.3))
    theta = float(rng.uniform(0.0, 1.0))
    n0 = int(rng.integers(int(12 / eps ** 2), int(40 / eps ** 2)))
    cuts = [n0]
    for _ in range(int(rng.integers(1, 8))):
        cuts.append(cuts[-1] + max(1, int(rng.uniform(0.5, 1.0) * eps * cuts[-1])))
    k = np.arange(1, cuts[-1] + 1, dtype=np.float64)
    x = RealSequence(1, k * theta)
    return check_block_aggregation(x, eps, cuts, oracle_max=oracle_max)


def _inst_chebyshev(rng, oracle_max):
    n = int(rng.integers(1, 60))
    a = np.sort(_log_uniform(rng, 1e-3, 1e3, n))[::-1]
    b = np.sort(_log_uniform(rng, 1e-3, 1e3, n))[::-1]
    if rng.integers(4) == 0:
        b = np.full(n, float(rng.uniform(0.1, 10)))
    return check_chebyshev(a, b)


_GENERATORS: dict[str, Callable] = {
    "L3": _inst_L3, "L5": _inst_L5, "L6": _inst_L6, "L7": _inst_L7, "L1": _inst_L1,
    "L2": _inst_L2, "L4": _inst_L4, "L8": _inst_L8, "Chebyshev": _inst_chebyshev,
}


@dataclass
class SuiteReport:
    lemma_id: str
    trials: int
    accepted: int
    rejected: int
    failed: int
    worst_margin: float | None
    max_ratio: float | None
    seed: int
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failed == 0 and self.accepted == self.trials

    def as_dict(self) -> dict:
        out = {"lemma_id": self.lemma_id, "trials": self.trials, "accepted": self.accepted,
               "rejected": self.rejected, "failed": self.failed,
               "worst_margin": self.worst_margin, "max_ratio": self.max_ratio,
               "seed": self.seed}
        if self.failures:
            out["failures"] = list(self.failures)
        return out


def run_instance(lemma_id: str, seed: int, index: int,
                 oracle_max: int = SUITE_ORACLE_MAX) -> LemmaCheck | None:
    """One seeded attempt; None when the drawn instance was rejected."""
    rng = np.random.default_rng([seed, _CODES[lemma_id], index])
    try:
        chk = _GENERATORS[lemma_id](rng, oracle_max)
    except RejectedInstance:
        return None
    token = f"{lemma_id}:{seed}:{index}"
    return LemmaCheck(chk.lemma_id, chk.lhs, chk.rhs, chk.margin, chk.passed, token,
                      chk.ratio, chk.note)


def run_suite(lemma_id: str, trials: int, seed: int, *, threads: int = 1,
              max_attempt_factor: int = 20, oracle_max: int = SUITE_ORACLE_MAX) -> SuiteReport:
    """Draw instances until ``trials`` are accepted (or attempts run out).

    Attempt i uses ``default_rng([seed, code, i])`` so results do not depend
    on ``threads``.  Small instances use the brute-force discrepancy; larger
    ones the closed form, which is cross-checked against the brute force
    once per suite.
    """
    if lemma_id not in _GENERATORS:
        raise ValueError(f"unknown lemma {lemma_id!r}")
    if trials < 0:
        raise ValueError("trials must be >= 0")
    accepted = rejected = failed = 0
    worst: float | None = None
    max_ratio: float | None = None
    failures: list[str] = []
    attempt = 0
    limit = max(trials * max_attempt_factor, 100)
    batch = 256 if threads > 1 else 1

    def work(i):
        return run_instance(lemma_id, seed, i, oracle_max)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        while accepted < trials and attempt < limit:
            idx = range(attempt, min(attempt + batch, limit))
            results = pool.map(work, idx) if threads > 1 else map(work, idx)
            for res in results:
                attempt += 1
                if accepted >= trials:
                    break
                if res is None:
                    rejected += 1
                    continue
                accepted += 1
                worst = res.margin if worst is None else min(worst, res.margin)
                if res.ratio is not None:
                    max_ratio = res.ratio if max_ratio is None else max(max_ratio, res.ratio)
                if not res.passed:
                    failed += 1
                    if len(failures) < 10:
                        failures.append(res.instance_digest)
    if lemma_id in ("L5", "L1", "L2", "L8") and accepted:
        _spot_check(lemma_id, seed)
    return SuiteReport(lemma_id, trials, accepted, rejected, failed, worst, max_ratio,
                       seed, failures)


def _spot_check(lemma_id: str, seed: int) -> None:
    """Confirm fast and brute-force discrepancy agree on one suite instance."""
    rng = np.random.default_rng([seed, _CODES[lemma_id], 1 << 40])
    v = _frac(random_convex(rng, 400, span=(0.5, 60.0)))
    a = extreme_discrepancy(v).value
    b = extreme_discrepancy_oracle(v).value
    if abs(a - b) > 1e-12:
        raise AssertionError(f"discrepancy paths disagree ({a} vs {b})")


def run_suites(lemma_ids: Sequence[str], trials: int, seed: int, *,
               threads: int = 1) -> list[SuiteReport]:
    return [run_suite(name, trials, seed, threads=threads) for name in lemma_ids]
