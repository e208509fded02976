"""Continued-fraction convergents and the epsilon-driven convergent choice."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr, mpq

from ._hp import as_fraction
from .seqlab.expr import Expr

log = logging.getLogger(__name__)

FLOAT_TRUST_Q = 1 << 26


@dataclass(frozen=True)
class Convergent:
    """p/q with |theta - p/q| <= 1/(q * q_next); ``q_next=None`` marks the exact last one."""

    p: int
    q: int
    q_next: int | None
    err_bound: float

    @property
    def terminal(self) -> bool:
        return self.q_next is None


def _theta_source(theta):
    """(exact mpq or None, callable bits -> mpq) for the accepted theta types."""
    if isinstance(theta, str):
        theta = Expr(theta)
    if isinstance(theta, Expr):
        exact = theta.rational
        if exact is not None:
            q = mpq(exact.numerator, exact.denominator)
            return q, lambda bits: q
        return None, lambda bits: mpq(theta.evaluate(bits))
    if isinstance(theta, float):
        if not math.isfinite(theta):
            raise ValueError("theta must be finite")
        q = mpq(theta)
        return q, lambda bits: q
    if isinstance(theta, mpfr):
        if not gmpy2.is_finite(theta):
            raise ValueError("theta must be finite")
        q = mpq(theta)
        return q, lambda bits: q
    if not isinstance(theta, type(mpq(0))):
        f = as_fraction(theta)
        theta = mpq(f.numerator, f.denominator)
    return theta, lambda bits: theta


def _expand(x: mpq, q_cap: int):
    """Convergents (p_k, q_k) of x >= 0 up to and including the first q_k > q_cap."""
    out = []
    p0, q0, p1, q1 = 0, 1, 1, 0
    while True:
        a = int(gmpy2.floor(x))
        p0, p1 = p1, a * p1 + p0
        q0, q1 = q1, a * q1 + q0
        out.append((p1, q1))
        frac = x - a
        if frac == 0 or q1 > q_cap:
            return out, frac == 0
        x = 1 / frac


def _convergents_of(x: mpq, q_cap: int) -> list[Convergent]:
    sign = -1 if x < 0 else 1
    raw, exhausted = _expand(abs(x), q_cap)
    # 1 = q_0 = q_1 happens when the second partial quotient is 1: keep the later one
    pairs = []
    for p, q in raw:
        if pairs and pairs[-1][1] == q:
            pairs[-1] = (p, q)
        else:
            pairs.append((p, q))
    out = []
    for i, (p, q) in enumerate(pairs):
        if q > q_cap:
            break
        nxt = pairs[i + 1][1] if i + 1 < len(pairs) else None
        bound = 0.0 if nxt is None else 1.0 / (q * nxt)
        out.append(Convergent(sign * p, q, nxt, bound))
    if out and out[-1].q_next is None and not exhausted:
        raise AssertionError("expansion stopped early")
    return out


def _validate(conv: list[Convergent], x: mpq) -> None:
    for c in conv:
        if math.gcd(abs(c.p), c.q) != 1:
            raise ArithmeticError(f"convergent {c.p}/{c.q} not in lowest terms")
        err = abs(x - mpq(c.p, c.q))
        if c.q_next is None:
            if err != 0:
                raise ArithmeticError(f"terminal convergent {c.p}/{c.q} is not exact")
        elif err * c.q * c.q_next > 1:
            raise ArithmeticError(f"convergent {c.p}/{c.q} violates the error bound")


def convergents(theta, q_cap: int) -> list[Convergent]:
    """All convergents p/q of theta with q <= q_cap, in order.

    ``theta`` may be an int, Fraction, float (taken as its exact binary
    value), gmpy2 number, or an expression string/Expr such as ``sqrt(2)``,
    which is evaluated at increasing precision until the list is stable.
    """
    q_cap = int(q_cap)
    if q_cap < 1:
        raise ValueError("q_cap must be >= 1")
    if isinstance(theta, float) and q_cap > FLOAT_TRUST_Q:
        log.warning("double-precision theta: convergents beyond q=2**26 describe the double, "
                    "not the intended real")
    exact, at = _theta_source(theta)
    if exact is not None:
        out = _convergents_of(exact, q_cap)
        _validate(out, exact)
        return out
    bits = 4 * q_cap.bit_length() + 96
    prev = None
    while True:
        x = at(bits)
        cur = _convergents_of(x, q_cap)
        # q_next must also be known reliably: require agreement at doubled precision
        if prev is not None and cur == prev:
            _validate(cur, at(2 * bits))
            return cur
        prev = cur
        bits *= 2
        if bits > 1 << 16:
            raise ArithmeticError("continued fraction did not stabilize")


def select_convergent(theta, epsilon) -> Convergent:
    """The convergent with q <= eps**-4 < q_next (exact rational last one if the expansion ends)."""
    eps = as_fraction(epsilon)
    # the closed endpoint 1/10 is admitted here: selection is well defined there
    if not (0 < eps <= Fraction(1, 10)):
        raise ValueError("epsilon must satisfy 0 < eps <= 1/10")
    cap = math.floor(1 / eps ** 4)
    conv = convergents(theta, cap)
    if not conv:
        raise ArithmeticError("no convergent below the cap")
    return conv[-1]
