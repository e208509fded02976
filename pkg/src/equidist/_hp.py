"""High-precision helpers on top of gmpy2.

Precision is always set through a thread-local gmpy2 context, so callers on
different threads never see each other's settings.
"""
from __future__ import annotations

from contextlib import contextmanager
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr, mpq

TWO64 = 1 << 64
MASK64 = TWO64 - 1


@contextmanager
def precision(bits: int):
    with gmpy2.context(gmpy2.get_context(), precision=int(bits)):
        yield


def to_mpq(x) -> mpq:
    """Exact rational value of an int, Fraction, float, mpq or mpfr."""
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return mpq(x)
    return mpq(x)


def as_fraction(x) -> Fraction:
    """Exact Fraction; floats are read through their shortest repr (0.1 -> 1/10)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("boolean is not a number")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x)
    q = mpq(x)
    return Fraction(int(q.numerator), int(q.denominator))


def bitlen(x) -> int:
    """Number of bits of the integer part of |x| (0 for |x| < 1)."""
    if isinstance(x, int):
        return abs(x).bit_length()
    return abs(int(gmpy2.floor(abs(mpfr(x))))).bit_length()


def frac_fixed(x) -> int:
    """Fractional part of an mpfr as a 64-bit fixed-point integer (x mod 1 in units of 2**-64)."""
    q = mpq(x) * TWO64
    num, den = int(q.numerator), int(q.denominator)
    return ((2 * num + den) // (2 * den)) & MASK64
