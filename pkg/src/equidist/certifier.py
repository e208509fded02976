"""Segment-by-segment certification of small discrepancy.

Starting at an index n inside the hypothesis window, the first difference
D x_n is approximated by a convergent p/q with q <= eps**-4 < q_next.

* q > 1/eps: the next q terms sit within 2/q of the rotation x_n + j p/q,
  whose fractional parts form the residue system {j p / q}.
* q <= 1/eps: the terms split into q residue classes
  y_k(r) = x_{n+r+(k-1)q} - k p, each with monotone first differences,
  and the sign-change index h(0) selects how many terms m per class are
  taken (three sub-cases).

Each segment records its parameters and a measured discrepancy; segments
chain n -> n + (covered count) and the run is aggregated at the end.

All dispatch quantities (first differences, h(r), delta) are computed
exactly in rational arithmetic on high-precision values; comparisons carry
no tolerance.
"""
from __future__ import annotations

import logging
import math
from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from gmpy2 import mpq

from .diophantine import Convergent, select_convergent
from .discrepancy import BinnedDiscrepancy, Witness, extreme_discrepancy
from .lemmalab import LemmaCheck, block_aggregation_bound, digest_of, verdict
from .seqlab.core import SequenceSpec, _as_spec
from .seqlab.families import Family, fixed_to_float
from .seqlab.hypothesis import HypothesisViolation, check_epsilon, hypothesis_scan, window_condition

log = logging.getLogger(__name__)

EXACT_LIMIT = 1 << 22
POINT_BUDGET = 3 * 10 ** 8
_PIECE = 1 << 20
CASES = ("case1", "case2_1", "case2_2", "case2_3", "fallback")


class CertificationError(RuntimeError):
    """A segment exceeded the accepted bound; carries the offending certificate."""

    def __init__(self, message: str, certificate: SegmentCertificate | None = None):
        super().__init__(message)
        self.certificate = certificate


# -- residue sequences ---------------------------------------------------------

@dataclass(frozen=True)
class ResidueSequence:
    """y_k(r) = x_{n+r+(k-1)q} - k p for k = 1..k_max (exact rationals)."""

    r: int
    n: int
    p: int
    q: int
    values: tuple

    def __len__(self) -> int:
        return len(self.values)

    def differences(self) -> list:
        v = self.values
        return [v[i + 1] - v[i] for i in range(len(v) - 1)]

    def as_float(self) -> np.ndarray:
        return np.array([float(x) for x in self.values])


def residue_sequence(spec: SequenceSpec | str, n: int, p: int, q: int, r: int,
                     k_max: int) -> ResidueSequence:
    spec = _as_spec(spec)
    if not 0 <= r <= q:
        raise ValueError(f"residue r={r} outside [0, {q}]")
    if k_max < 3:
        raise ValueError("k_max must be >= 3")
    fam = spec.closed_form
    last = n + r + (k_max - 1) * q
    bits = fam.working_bits(last)
    vals = tuple(mpq(fam.value(n + r + (k - 1) * q, bits)) - k * p for k in range(1, k_max + 1))
    return ResidueSequence(r, n, p, q, vals)


@dataclass(frozen=True)
class SignChange:
    """h: number of leading k with D y_k <= 0 (None means no sign change seen)."""

    h: int | None
    beta_positive: bool

    @property
    def infinite(self) -> bool:
        return self.h is None


def sign_change_index(y) -> SignChange:
    """Sign-change index of a nondecreasing run of first differences.

    ``y`` is a :class:`ResidueSequence` or the differences D y_1, D y_2, ...
    themselves.
    """
    d = y.differences() if isinstance(y, ResidueSequence) else list(y)
    if not d:
        raise ValueError("no differences to examine")
    for i in range(len(d) - 1):
        if d[i + 1] < d[i]:
            raise HypothesisViolation(
                f"hypothesis violated: first differences decrease at k={i + 1}")
    for i, v in enumerate(d):
        if v > 0:
            return SignChange(i, True)
    return SignChange(None, False)


class _Residues:
    """Exact D y_k(r) for one (n, p, q) with cached high-precision values."""

    def __init__(self, fam: Family, n: int, p: int, q: int, k_max: int):
        self.fam, self.n, self.p, self.q, self.k_max = fam, n, p, q, k_max
        self.bits = fam.working_bits(n + q * (k_max + 2)) + 16

    def x(self, idx: int) -> mpq:
        return mpq(self.fam.value(idx, self.bits))

    def y(self, k: int, r: int) -> mpq:
        return self.x(self.n + r + (k - 1) * self.q) - k * self.p

    def dy(self, k: int, r: int) -> mpq:
        i = self.n + r + (k - 1) * self.q
        return self.x(i + self.q) - self.x(i) - self.p

    def h(self, r: int) -> int | None:
        """Count of leading k with D y_k(r) <= 0 (binary search), None if none turn positive."""
        if self.dy(1, r) > 0:
            return 0
        if self.dy(self.k_max, r) <= 0:
            return None
        lo, hi = 1, self.k_max  # dy(lo) <= 0 < dy(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.dy(mid, r) > 0:
                hi = mid
            else:
                lo = mid
        # local monotonicity around the crossing
        ks = [k for k in (lo - 1, lo, hi, hi + 1) if 1 <= k <= self.k_max]
        vals = [self.dy(k, r) for k in ks]
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise HypothesisViolation(f"hypothesis violated: D y_k({r}) not monotone near k={lo}")
        return lo


# -- certificates ----------------------------------------------------------------

@dataclass
class SegmentCertificate:
    n: int
    m: int
    case: str
    p: int
    q: int
    q_next: int | None
    alpha: float
    h0: int | None
    delta: float | None
    measured_D: float
    epsilon: float
    bound_ratio: float
    witness: Witness | None = None
    measured_kind: str = "exact"
    covered: int = 0
    orientation: int = 1
    prefix_slack: float | None = None
    position_error: float = 0.0
    class_D_max: float | None = None
    h_range: tuple[int, int] | None = None
    checks: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def next_n(self) -> int:
        return self.n + self.covered

    def as_dict(self) -> dict:
        w = None if self.witness is None else {
            "a": self.witness.a, "b": self.witness.b,
            "a_closed": self.witness.a_closed, "b_closed": self.witness.b_closed}
        return {
            "n": self.n, "m": self.m, "case": self.case, "p": self.p, "q": self.q,
            "q_next": self.q_next, "alpha": self.alpha, "h0": self.h0, "delta": self.delta,
            "measured_D": self.measured_D, "bound_ratio": self.bound_ratio, "witness": w,
            "epsilon": self.epsilon, "covered": self.covered,
            "measured_kind": self.measured_kind, "orientation": self.orientation,
            "prefix_slack": self.prefix_slack, "position_error": self.position_error,
            "class_D_max": self.class_D_max,
            "h_range": None if self.h_range is None else list(self.h_range),
            "checks": dict(self.checks), "notes": list(self.notes),
        }


@dataclass
class CertificateRun:
    epsilon: float
    n_epsilon: int | None
    segments: list[SegmentCertificate]
    aggregate_D: float | None
    constant_C: float
    n_start: int = 0
    n_end: int = 0
    aggregate_kind: str = "exact"
    aggregation: LemmaCheck | None = None
    chain_factor: float = 0.0  # the run chains with n_{j+1} <= (1 + 2 eps) n_j

    def cutpoints(self) -> list[int]:
        if not self.segments:
            return []
        return [self.segments[0].n] + [s.next_n for s in self.segments]

    def case_counts(self) -> dict[str, int]:
        out = {c: 0 for c in CASES}
        for s in self.segments:
            out[s.case] += 1
        return out

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon, "n_epsilon": self.n_epsilon, "constant_C": self.constant_C,
            "segments": [s.as_dict() for s in self.segments],
            "aggregate_D": self.aggregate_D, "aggregate_kind": self.aggregate_kind,
            "chain_factor": self.chain_factor, "n_start": self.n_start, "n_end": self.n_end,
            "aggregation": None if self.aggregation is None else self.aggregation.as_dict(),
        }


# -- measurement -------------------------------------------------------------------

def _pieces(lo: int, count: int, size: int = _PIECE):
    return [(s, min(size, lo + count - s)) for s in range(lo, lo + count, size)]


def fractional_block(fam: Family, lo: int, count: int, threads: int = 1):
    """Fixed-point fractional parts of x_lo .. x_{lo+count-1} and their position error."""
    parts = _pieces(lo, count)
    if threads > 1 and len(parts) > 1:
        with ThreadPoolExecutor(threads) as pool:
            got = list(pool.map(lambda a: fam.fixed_block(*a), parts))
    else:
        got = [fam.fixed_block(*a) for a in parts]
    if not got:
        return np.empty(0, dtype=np.uint64), 0.0
    return np.concatenate([g[0] for g in got]), max(g[1] for g in got)


@dataclass
class _Measure:
    D: float
    witness: Witness | None
    kind: str
    position_error: float
    class_D: list[float] | None = None
    union_lower: float | None = None


def _measure(fam: Family, lo: int, count: int, q: int = 1, *, threads: int = 1,
             per_class: bool = False) -> _Measure:
    """Discrepancy of x_lo..x_{lo+count-1}, optionally per residue class mod q.

    Exact (sorted) up to EXACT_LIMIT points; beyond that a streaming binned
    upper bound that already includes the position error.
    """
    if count > POINT_BUDGET:
        raise CertificationError(f"segment of {count} points exceeds the point budget")
    if count <= EXACT_LIMIT:
        fx, err = fractional_block(fam, lo, count, threads)
        u = fixed_to_float(fx)
        rep = extreme_discrepancy(u)
        cls = None
        if per_class:
            cls = [extreme_discrepancy(u[r::q]).value for r in range(min(q, count))]
        return _Measure(rep.value, rep.witness, "exact", err, cls, rep.value)
    binned = BinnedDiscrepancy(classes=q if per_class else 1)
    worst = 0.0

    def chunk(a):
        s, c = a
        fx, err = fam.fixed_block(s, c)
        labels = (np.arange(s - lo, s - lo + c, dtype=np.int64) % q) if per_class else 0
        return fx, labels, err

    parts = _pieces(lo, count)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            for fx, labels, err in pool.map(chunk, parts):
                binned.add(fx, labels, err)
    else:
        for a in parts:
            fx, labels, err = chunk(a)
            binned.add(fx, labels, err)
    worst = binned.position_error
    lo_u, hi_u = binned.bounds()
    cls = [binned.bounds(r)[1] for r in range(q)] if per_class else None
    return _Measure(hi_u, None, "upper_bound", worst, cls, lo_u)


# -- one segment -------------------------------------------------------------------

def _oriented(fam: Family, n: int) -> tuple[Family, int]:
    if fam.d2(n) < 0:
        return fam.negated(), -1
    return fam, 1


def _case1_checks(fam: Family, n: int, conv: Convergent, eps: Fraction) -> dict:
    p, q = conv.p, conv.q
    j = np.arange(1, q + 1, dtype=np.int64)
    z = (j * (p % q) % q) / q
    z_ok = abs(extreme_discrepancy(z).value - 1.0 / q) <= 1e-12
    # x_{n+j} - x_n - j p/q through the Taylor expansion at n
    if fam.closed_form and n >= 64:
        bits = fam.working_bits(n + q) + 32
        coeffs = []
        for k, c in enumerate(fam.taylor(n, bits)):
            if k == 0:
                continue
            if k == 1:
                coeffs.append(float(mpq(c) - mpq(p, q)))
            else:
                coeffs.append(float(c))
            if k >= 2 and abs(coeffs[-1]) * float(q) ** k < 1e-18:
                break
            if k > 60:
                break
        jf = j.astype(np.float64)
        drift = np.zeros(q)
        pw = np.ones(q)
        for c in coeffs:
            pw = pw * jf
            drift += c * pw
        worst = float(np.max(np.abs(drift)))
    else:
        bits = fam.working_bits(n + q) + 32
        x0 = mpq(fam.value(n, bits))
        worst = max(abs(float(mpq(fam.value(n + int(k), bits)) - x0 - mpq(int(k) * p, q)))
                    for k in j)
    return {"residue_system_1_over_q": bool(z_ok), "drift_max": worst,
            "drift_within_2_over_q": bool(worst <= 2.0 / q), "q_le_n_eps": bool(q <= n * eps)}


def build_segment(spec: SequenceSpec | str, n: int, epsilon, constant_C: float = 10.0, *,
                  threads: int = 1, p1_samples: int = 8) -> SegmentCertificate:
    """Certify the block of terms following index n."""
    spec = _as_spec(spec)
    eps = check_epsilon(epsilon)
    epsf = float(eps)
    n = int(n)
    base = spec.closed_form
    fam, orient = _oriented(base, n)
    why = window_condition(fam, n, eps)
    if why is not None:
        raise HypothesisViolation(f"hypothesis violated at n={n}: {why}")

    dx = fam.d1(n)
    conv = select_convergent(dx, eps)
    p, q = conv.p, conv.q
    alpha_q = q * dx - p
    alpha = float(alpha_q)
    e4 = mpq(eps.numerator ** 4, eps.denominator ** 4)
    checks: dict = {"alpha_below_eps4": bool(abs(alpha_q) < e4)}
    notes: list[str] = []
    if conv.terminal:
        notes.append("first difference is rational with all denominators <= eps^-4")

    def finish(case, m, measure, **kw) -> SegmentCertificate:
        cert = SegmentCertificate(
            n=n, m=m, case=case, p=p, q=q, q_next=conv.q_next, alpha=alpha,
            h0=kw.get("h0"), delta=kw.get("delta"), measured_D=measure.D, epsilon=epsf,
            bound_ratio=measure.D / epsf, witness=measure.witness,
            measured_kind=measure.kind, covered=q * m if case != "case1" else q,
            orientation=orient, prefix_slack=kw.get("prefix_slack"),
            position_error=measure.position_error,
            class_D_max=None if measure.class_D is None else max(measure.class_D),
            h_range=kw.get("h_range"), checks=checks, notes=notes)
        return cert

    if q * eps > 1:
        checks.update(_case1_checks(fam, n, conv, eps))
        meas = _measure(base, n + 1, q, threads=threads)
        return finish("case1", q, meas)

    # Case 2: residue classes
    k_max = max(3, math.ceil(3 * n / q))
    res = _Residues(fam, n, p, q, k_max)
    rs = list(range(0, q + 1))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            hs = list(pool.map(res.h, rs))
    else:
        hs = [res.h(r) for r in rs]
    h0 = hs[0]
    finite = [h for h in hs[1:] if h is not None]
    h_range = None if not finite else (min(finite), max(finite))
    if h0 is None:
        mono = all(h is None or h >= k_max - 1 for h in hs[1:])
    else:
        mono = all(h is not None and h0 - 1 <= h <= h0 for h in hs[1:])
    checks["h_monotone"] = bool(mono)
    checks.update(_p1_checks(fam, res, alpha_q, hs, p1_samples))

    ne2 = n * eps * eps
    two_n_eps = 2 * n * eps
    delta_q = None
    case, m, prefix = None, None, None
    if h0 is None or h0 >= ne2:
        case, m = "case2_1", math.floor(ne2) - 1
    else:
        k_d = max(h0 - 1, 1)
        if h0 - 1 < 1:
            notes.append("h(0) < 2: delta taken at k=1")
        delta_q = res.dy(k_d + 1, 0) - res.dy(k_d, 0)
        # h0 > 1/(eps sqrt(delta))  <=>  h0^2 eps^2 delta > 1
        e2 = mpq(eps.numerator ** 2, eps.denominator ** 2)
        if delta_q > 0 and h0 * h0 * e2 * delta_q > 1:
            case, m = "case2_2", h0 - 2
        else:
            case = "case2_3"
            m = _case23_m(res, h0, 2 * math.floor(ne2), e4)
            prefix = h0 / m if m > 0 else None
    delta = None if delta_q is None else float(delta_q)

    reason = None
    if not mono:
        reason = "h(r) outside [h(0)-1, h(0)]"
    elif m is None or m < 1:
        reason = f"degenerate m for {case}"
    elif q * m > two_n_eps:
        reason = f"coverage q*m={q * m} exceeds 2 n eps"
    elif not checks.get("p1_nonnegative", True):
        reason = "P1 addend negative"
    if reason is None:
        checks["coverage_le_2n_eps"] = True
        if q * m > POINT_BUDGET:
            raise CertificationError(
                f"{case} segment at n={n} covers q*m={q * m} terms, above the measurement "
                f"budget of {POINT_BUDGET}")
        meas = _measure(base, n + 1, q * m, q, threads=threads, per_class=True)
        checks["interleave"] = bool(meas.union_lower <= max(meas.class_D) + 1e-12)
        return finish(case, m, meas, h0=h0, delta=delta, prefix_slack=prefix, h_range=h_range)
    notes.append(f"fallback from {case}: {reason}")
    log.info("segment at n=%d falls back: %s", n, reason)
    meas = _measure(base, n + 1, q, threads=threads)
    return finish("fallback", 1, meas, h0=h0, delta=delta, h_range=h_range)


def _case23_m(res: _Residues, h0: int, cap: int, e4) -> int:
    """Smallest m with y_m(0) - y_{h0+1}(0) >= eps^-4, capped at ``cap``."""
    target = 1 / e4
    base = res.y(h0 + 1, 0)
    lo = h0 + 1
    if cap <= lo:
        return cap
    if res.y(cap, 0) - base < target:
        return cap
    hi = cap  # y(hi) - base >= target, y(lo) - base = 0 < target
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if res.y(mid, 0) - base >= target:
            hi = mid
        else:
            lo = mid
    return hi


def _p1_checks(fam: Family, res: _Residues, alpha_q, hs, samples: int) -> dict:
    """D y_k(r) - alpha is a sum of second differences: sample them and the sums."""
    n, q = res.n, res.q
    ks = sorted({1, 2, res.k_max // 2, res.k_max - 1,
                 *(h for h in hs if h is not None and h >= 1)})
    ks = [k for k in ks if 1 <= k < res.k_max][: max(samples, 4)]
    worst_sum = None
    for r in (0, q):
        for k in ks:
            v = res.dy(k, r) - alpha_q
            worst_sum = v if worst_sum is None else min(worst_sum, v)
    span = q * res.k_max
    idx = sorted({n + span * i // max(samples - 1, 1) for i in range(samples)})
    worst_d2 = min(fam.d2(int(i)) for i in idx)
    return {"p1_min_sum": float(worst_sum), "p1_min_d2": float(worst_d2),
            "p1_nonnegative": bool(worst_sum >= -1e-12 and worst_d2 >= -1e-12)}


# -- chaining ----------------------------------------------------------------------

def iter_segments(spec: SequenceSpec | str, epsilon, n_start: int, n_end: int,
                  constant_C: float = 10.0, *, max_segments: int | None = None,
                  threads: int = 1) -> Iterator[SegmentCertificate]:
    """Yield certificates for the chain n_start = n_0 < n_1 < ... until n_end is reached."""
    spec = _as_spec(spec)
    eps = check_epsilon(epsilon)
    n = int(n_start)
    count = 0
    while n < n_end and (max_segments is None or count < max_segments):
        cert = build_segment(spec, n, eps, constant_C, threads=threads)
        cert.checks["chain_le_1_plus_2eps"] = bool(cert.next_n <= (1 + 2 * eps) * n)
        if cert.bound_ratio > constant_C:
            w = cert.witness
            where = "" if w is None else f" on witness [{w.a:.17g}, {w.b:.17g}]"
            raise CertificationError(
                f"segment at n={n} ({cert.case}) has D={cert.measured_D:.6g}, ratio "
                f"{cert.bound_ratio:.4g} > C={constant_C}{where}", cert)
        yield cert
        n = cert.next_n
        count += 1


def certify_range(spec: SequenceSpec | str, epsilon, n_start: int, n_end: int,
                  constant_C: float = 10.0, *, max_segments: int | None = None,
                  threads: int = 1, aggregate: bool = True) -> CertificateRun:
    """Run the chain on (n_start, n_end] and aggregate.

    n(eps) is found by scanning the window up to n_end; n_start must not be
    below it.  The empty range returns a run without segments.
    """
    spec = _as_spec(spec)
    eps = check_epsilon(epsilon)
    epsf = float(eps)
    n_start, n_end = int(n_start), int(n_end)
    if n_end < n_start:
        raise ValueError("n_end must be >= n_start")
    if n_end == n_start:
        return CertificateRun(epsf, None, [], None, constant_C, n_start, n_end,
                              aggregate_kind="empty", chain_factor=2 * epsf)
    n_eps = admissible_start(spec, eps, n_start, n_end)
    segs = list(iter_segments(spec, eps, n_start, n_end, constant_C,
                              max_segments=max_segments, threads=threads))
    run = CertificateRun(epsf, n_eps, segs, None, constant_C, n_start, n_end,
                         chain_factor=2 * epsf)
    if aggregate and segs:
        aggregate_run(run, spec, threads=threads)
    return run


def aggregate_run(run: CertificateRun, spec: SequenceSpec | str, *, threads: int = 1) -> None:
    """Measure the covered union and apply the finite-scale aggregation bound.

    Blocks chain with factor 1 + 2 eps, so the bound runs with
    eps_eff = max(2 eps, largest block discrepancy).
    """
    spec = _as_spec(spec)
    cuts = run.cutpoints()
    fam = spec.closed_form
    total = cuts[-1] - cuts[0]
    meas = _measure(fam, cuts[0] + 1, total, threads=threads)
    run.aggregate_D = meas.D
    run.aggregate_kind = meas.kind
    eps_eff = max(2 * run.epsilon, max(s.measured_D for s in run.segments))
    chain_ok = all(b <= (1 + eps_eff) * a for a, b in zip(cuts, cuts[1:]))
    rhs = block_aggregation_bound(eps_eff, 0, total, cuts[-1] - cuts[-2])
    token = digest_of("L4-run", str(spec), run.epsilon, cuts[0], cuts[-1], len(cuts))
    chk = verdict("L4", meas.D, rhs, token,
                  note=f"eps_eff={eps_eff:.17g}; chain {'ok' if chain_ok else 'violated'}")
    if not chain_ok:
        chk = LemmaCheck(chk.lemma_id, chk.lhs, chk.rhs, chk.margin, False,
                         chk.instance_digest, None, chk.note)
    run.aggregation = chk


def interleave_check(cert: SegmentCertificate, spec: SequenceSpec | str, *,
                     threads: int = 1) -> LemmaCheck:
    """D(union) <= max over residue classes of D(class), recomputed from the sequence."""
    spec = _as_spec(spec)
    token = digest_of("L8-segment", str(spec), cert.n, cert.q, cert.m)
    if not cert.case.startswith("case2"):
        return LemmaCheck("L8", float("nan"), float("nan"), float("nan"), False, token,
                          note=f"not a case-2 certificate ({cert.case})")
    meas = _measure(spec.closed_form, cert.n + 1, cert.q * cert.m, cert.q,
                    threads=threads, per_class=True)
    lhs = meas.D if meas.kind == "exact" else meas.union_lower
    return verdict("L8", lhs, max(meas.class_D) + 1e-12, token,
                   note=f"{meas.kind} measurement")


def admissible_start(spec: SequenceSpec | str, epsilon, n_start: int | None, n_end: int) -> int:
    """n(eps) for the horizon n_end; raises unless n_start (when given) is at or past it."""
    eps = check_epsilon(epsilon)
    if n_end <= 1 / eps ** 5:
        raise HypothesisViolation(
            f"hypothesis violated: the window needs n > eps^-5 = {float(1 / eps ** 5):.6g}")
    rep = hypothesis_scan(spec, eps, n_end)
    if rep.n_epsilon is None:
        where = ""
        if rep.violations:
            where = f" (last at n={rep.violations[-1][0]}: {rep.violations[-1][1]})"
        raise HypothesisViolation(f"hypothesis violated up to the horizon {n_end}{where}")
    if n_start is not None and n_start < rep.n_epsilon:
        raise HypothesisViolation(
            f"hypothesis violated: n_start={n_start} is below n(eps)={rep.n_epsilon}")
    return rep.n_epsilon
