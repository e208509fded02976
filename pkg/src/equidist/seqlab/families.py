"""Closed-form evaluators behind each sequence family.

Every family can produce

* exact values at any index (gmpy2, precision chosen from the magnitude),
* fractional parts of long index blocks as 64-bit fixed-point integers.

The block path re-expands the closed form around the start of each chunk,
``x_{b+j} = sum_k c_k j**k``, reduces the coefficients modulo one in high
precision and then evaluates the polynomial with wrapping uint64 arithmetic.
That keeps the fractional phase intact for x_n ~ 1e46 where doubles would
have no fractional bits at all.
"""
from __future__ import annotations

import math

import gmpy2
import numpy as np
from gmpy2 import mpfr, mpq

from .._hp import frac_fixed, precision
from .expr import Expr

_DIRECT_BELOW = 256
_MAX_CHUNK = 1 << 16
_WRAP = 2.0 ** -8
_NEGLIGIBLE = 2.0 ** -68
_MAX_TERMS = 40


class SequenceError(ValueError):
    """Raised when a sequence cannot be generated for the requested indices."""


class Family:
    """Base class: x_n for integer n >= 1, optionally negated."""

    sign: int = 1
    first_index: int = 1
    last_index: int | None = None
    closed_form = True

    def negated(self) -> Family:
        out = object.__new__(type(self))
        out.__dict__.update(self.__dict__)
        out.sign = -self.sign
        return out

    # -- to be provided by subclasses -------------------------------------
    def _raw_value(self, n: int) -> mpfr:
        raise NotImplementedError

    def _raw_taylor(self, b: int):
        """Yield c_k = f^(k)(b)/k! for k = 0, 1, 2, ... at the current precision."""
        raise NotImplementedError

    def magnitude_bits(self, n: int) -> int:
        raise NotImplementedError

    def _raw_d2_series(self, n: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- shared machinery --------------------------------------------------
    def check_range(self, lo: int, hi: int) -> None:
        if lo < self.first_index or (self.last_index is not None and hi > self.last_index):
            last = "inf" if self.last_index is None else self.last_index
            raise SequenceError(
                f"index range [{lo}, {hi}] outside available [{self.first_index}, {last}]")

    def working_bits(self, n: int) -> int:
        return max(self.magnitude_bits(n), 1) + 128

    def value(self, n: int, bits: int | None = None) -> mpfr:
        self.check_range(n, n)
        with precision(bits or self.working_bits(n)):
            v = self._raw_value(n)
            return -v if self.sign < 0 else +v

    def values_mpq(self, n: int, count: int, bits: int | None = None) -> list[mpq]:
        bits = bits or self.working_bits(n + count)
        return [mpq(self.value(n + i, bits)) for i in range(count)]

    def d1(self, n: int) -> mpq:
        """First difference x_{n+1} - x_n as an (exactly represented) rational."""
        return self._difference(n, 1)

    def d2(self, n: int) -> mpq:
        """Second difference x_{n+2} - 2 x_{n+1} + x_n."""
        return self._difference(n, 2)

    def _difference(self, n: int, order: int) -> mpq:
        self.check_range(n, n + order)
        bits = self.working_bits(n + order)
        if not self.closed_form or n < 64:
            v = [mpq(self.value(n + i, bits)) for i in range(order + 1)]
            return v[1] - v[0] if order == 1 else v[2] - 2 * v[1] + v[0]
        # x_{n+1} - x_n = sum_{k>=1} c_k and D2 = sum_{k>=2} c_k (2^k - 2): no cancellation
        total = mpq(0)
        small = 0
        with precision(bits):
            for k, c in enumerate(self.taylor(n, bits)):
                if k < order:
                    continue
                w = 1 if order == 1 else (1 << k) - 2
                term = mpq(c) * w
                total += term
                small = small + 1 if abs(term) <= abs(total) * mpq(1, 1 << 150) else 0
                if small >= 2 or k > 400:
                    break
        return total

    def d2_float(self, n: np.ndarray) -> np.ndarray:
        """Vectorized second differences in double precision (for scanning)."""
        n = np.asarray(n, dtype=np.int64)
        out = np.empty(n.shape, dtype=np.float64)
        small = n < 64
        if small.any():
            out[small] = [float(self.d2(int(k))) for k in n[small]]
        big = ~small
        if big.any():
            out[big] = self.sign * self._raw_d2_series(n[big].astype(np.float64))
        return out

    def float_values(self, lo: int, hi: int) -> np.ndarray:
        self.check_range(lo, hi)
        return np.array([float(self.value(k, 80)) for k in range(lo, hi + 1)], dtype=np.float64)

    def taylor(self, b: int, bits: int):
        """Taylor coefficients around ``b`` (generator, already sign-adjusted)."""
        with precision(bits):
            for c in self._raw_taylor(b):
                yield -c if self.sign < 0 else c

    def fixed_block(self, lo: int, count: int) -> tuple[np.ndarray, float]:
        """Fractional parts of x_lo .. x_{lo+count-1} in units of 2**-64.

        Returns the array and a bound on the absolute position error of any
        element (in [0, 1) units).
        """
        if count <= 0:
            return np.empty(0, dtype=np.uint64), 0.0
        self.check_range(lo, lo + count - 1)
        out = np.empty(count, dtype=np.uint64)
        worst = 0.0
        pos, end = lo, lo + count
        while pos < end:
            if pos < _DIRECT_BELOW:
                stop = min(end, _DIRECT_BELOW)
                for k in range(pos, stop):
                    out[k - lo] = frac_fixed(self.value(k))
                worst = max(worst, 2.0 ** -64)
                pos = stop
                continue
            size = min(_MAX_CHUNK, pos // 16, end - pos)
            chunk, err = self._taylor_chunk(pos, size)
            out[pos - lo: pos - lo + len(chunk)] = chunk
            worst = max(worst, err)
            pos += len(chunk)
        return out, worst

    def _taylor_chunk(self, base: int, size: int) -> tuple[np.ndarray, float]:
        bits = self.working_bits(base + size) + 32
        coeffs: list[mpfr] = []
        gen = self.taylor(base, bits)
        quiet = 0
        for k, c in enumerate(gen):
            coeffs.append(c)
            mag = abs(float(c)) * float(size) ** k
            quiet = quiet + 1 if (k >= 2 and mag < _NEGLIGIBLE) else 0
            if quiet >= 2 or k >= _MAX_TERMS:
                break
        mags = [abs(float(c)) for c in coeffs]
        # shrink the chunk until every wrapping term of degree >= 2 keeps j**k <= 2**24
        while True:
            wrapping = [k for k in range(2, len(coeffs)) if mags[k] * float(size) ** k >= _WRAP]
            if not wrapping or float(size) ** max(wrapping) <= 2.0 ** 24 or size <= 1:
                break
            size //= 2
        tail = mags[-1] * float(size) ** (len(coeffs) - 1) * 2.0
        if len(coeffs) >= _MAX_TERMS and tail > 2.0 ** -40:
            raise SequenceError(f"Taylor expansion does not converge at n={base}")

        j = np.arange(size, dtype=np.uint64)
        acc = np.full(size, frac_fixed(coeffs[0]), dtype=np.uint64)
        err = 2.0 ** -64
        jk = j.copy()
        fl = np.zeros(size, dtype=np.float64)
        jf = j.astype(np.float64)
        jfk = jf.copy()
        for k in range(1, len(coeffs)):
            m = mags[k] * float(size) ** k
            if k == 1 or m >= _WRAP:
                acc += np.uint64(frac_fixed(coeffs[k])) * jk
                err += float(size) ** k * 2.0 ** -65
            elif m >= _NEGLIGIBLE:
                fl += float(coeffs[k]) * jfk
                err += m * 2.0 ** -50
            else:
                err += m
            if k + 1 < len(coeffs):
                jk = jk * j
                jfk = jfk * jf
        if fl.any():
            acc += np.rint(fl * 2.0 ** 64).astype(np.int64).view(np.uint64)
        return acc, err + tail


class PowerLaw(Family):
    """x_n = c * n**a + theta * n."""

    def __init__(self, a: Expr, c: Expr, theta: Expr):
        self.a, self.c, self.theta = a, c, theta
        self._af = float(a)
        self._cf = float(c)
        self._tf = float(theta)
        ra = a.rational
        self._int_a = int(ra) if ra is not None and ra.denominator == 1 and ra >= 0 else None

    def magnitude_bits(self, n: int) -> int:
        lg = math.log2(n) if n > 0 else 0.0
        terms = []
        if self._cf != 0:
            terms.append(self._af * lg + math.log2(abs(self._cf)))
        if self._tf != 0:
            terms.append(lg + math.log2(abs(self._tf)))
        return max([0, *(math.ceil(t) + 2 for t in terms)])

    def _params(self):
        bits = gmpy2.get_context().precision
        return self.a.evaluate(bits), self.c.evaluate(bits), self.theta.evaluate(bits)

    def _raw_value(self, n: int) -> mpfr:
        a, c, t = self._params()
        if self._int_a is not None:
            return c * mpfr(n) ** self._int_a + t * n
        return c * gmpy2.exp(a * gmpy2.log(mpfr(n))) + t * n

    def _raw_taylor(self, b: int):
        a, c, t = self._params()
        bf = mpfr(b)
        pw = bf ** self._int_a if self._int_a is not None else gmpy2.exp(a * gmpy2.log(bf))
        yield c * pw + t * b
        binom = mpfr(1)
        k = 0
        while True:
            k += 1
            binom = binom * (a - (k - 1)) / k
            pw = pw / bf
            term = c * binom * pw
            yield term + t if k == 1 else term

    def _raw_d2_series(self, n: np.ndarray) -> np.ndarray:
        a, c = self._af, self._cf
        total = np.zeros_like(n)
        binom = 1.0
        base = c * np.power(n, a)
        for k in range(1, 18):
            binom *= (a - (k - 1)) / k
            base = base / n
            if k >= 2:
                total += binom * base * (2.0 ** k - 2.0)
            if binom == 0.0:
                break
        return total

    def float_values(self, lo: int, hi: int) -> np.ndarray:
        self.check_range(lo, hi)
        if hi < 2 ** 53:
            n = np.arange(lo, hi + 1, dtype=np.float64)
            v = self._cf * np.power(n, self._af) + self._tf * n
            return self.sign * v
        return super().float_values(lo, hi)


class NLog(Family):
    """x_n = n log n."""

    def magnitude_bits(self, n: int) -> int:
        lg = math.log2(n) if n > 1 else 0.0
        return math.ceil(lg + math.log2(max(lg, 1.0))) + 2

    def _raw_value(self, n: int) -> mpfr:
        return mpfr(n) * gmpy2.log(mpfr(n))

    def _raw_taylor(self, b: int):
        bf = mpfr(b)
        lb = gmpy2.log(bf)
        yield bf * lb
        yield lb + 1
        k = 2
        inv = 1 / bf
        pw = inv
        while True:
            sgn = 1 if k % 2 == 0 else -1
            yield sgn * pw / (k * (k - 1))
            pw = pw * inv
            k += 1

    def _raw_d2_series(self, n: np.ndarray) -> np.ndarray:
        total = np.zeros_like(n)
        pw = 1.0 / n
        for k in range(2, 20):
            total += (1 if k % 2 == 0 else -1) * pw / (k * (k - 1)) * (2.0 ** k - 2.0)
            pw = pw / n
        return total

    def float_values(self, lo: int, hi: int) -> np.ndarray:
        self.check_range(lo, hi)
        if hi < 2 ** 53:
            n = np.arange(lo, hi + 1, dtype=np.float64)
            return self.sign * n * np.log(n)
        return super().float_values(lo, hi)


class Log(Family):
    """x_n = log n."""

    def magnitude_bits(self, n: int) -> int:
        return max(1, math.ceil(math.log2(max(math.log(max(n, 2)), 1.0))) + 1)

    def _raw_value(self, n: int) -> mpfr:
        return gmpy2.log(mpfr(n))

    def _raw_taylor(self, b: int):
        bf = mpfr(b)
        yield gmpy2.log(bf)
        inv = 1 / bf
        pw = inv
        k = 1
        while True:
            yield (pw if k % 2 == 1 else -pw) / k
            pw = pw * inv
            k += 1

    def _raw_d2_series(self, n: np.ndarray) -> np.ndarray:
        total = np.zeros_like(n)
        pw = 1.0 / n
        for k in range(1, 20):
            if k >= 2:
                total += (1 if k % 2 == 1 else -1) * pw / k * (2.0 ** k - 2.0)
            pw = pw / n
        return total

    def float_values(self, lo: int, hi: int) -> np.ndarray:
        self.check_range(lo, hi)
        if hi < 2 ** 53:
            return self.sign * np.log(np.arange(lo, hi + 1, dtype=np.float64))
        return super().float_values(lo, hi)


class DataSequence(Family):
    """Values read from a file or given explicitly; indices start at ``first_index``."""

    closed_form = False

    def __init__(self, values, first_index: int = 1):
        self.data = np.asarray(values, dtype=np.float64)
        self.data.setflags(write=False)
        self.first_index = int(first_index)
        self.last_index = self.first_index + len(self.data) - 1

    def magnitude_bits(self, n: int) -> int:
        return 64

    def _raw_value(self, n: int) -> mpfr:
        return mpfr(float(self.data[n - self.first_index]))

    def float_values(self, lo: int, hi: int) -> np.ndarray:
        self.check_range(lo, hi)
        return self.sign * self.data[lo - self.first_index: hi - self.first_index + 1].copy()

    def d2_float(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        if len(n) == 0:
            return np.empty(0)
        self.check_range(int(n.min()), int(n.max()) + 2)
        i = n - self.first_index
        d = self.data
        return self.sign * ((d[i + 2] - d[i + 1]) - (d[i + 1] - d[i]))

    def fixed_block(self, lo: int, count: int) -> tuple[np.ndarray, float]:
        if count <= 0:
            return np.empty(0, dtype=np.uint64), 0.0
        v = self.float_values(lo, lo + count - 1)
        return float_to_fixed(v), 2.0 ** -64


def float_to_fixed(v: np.ndarray) -> np.ndarray:
    """Fractional parts of doubles as 64-bit fixed point (exact for the given doubles)."""
    v = np.asarray(v, dtype=np.float64)
    fr = v - np.floor(v)
    fr = np.where(fr >= 1.0, 0.0, fr)
    return (fr * 2.0 ** 64).astype(np.uint64)


def fixed_to_float(u: np.ndarray) -> np.ndarray:
    """Fixed-point fractions to doubles in [0, 1) (truncating, never rounds up to 1)."""
    return (np.asarray(u, dtype=np.uint64) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
