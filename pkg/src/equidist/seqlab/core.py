"""Sequence types, generators, difference operators and monotonicity analysis."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .expr import Expr, ExprError
from .families import DataSequence, Family, Log, NLog, PowerLaw, SequenceError, fixed_to_float


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RealSequence:
    """Finite run of reals x_start, x_{start+1}, ..."""

    start_index: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))
        if self.start_index < 1:
            raise ValueError("start_index must be >= 1")
        if len(self.values) < 1:
            raise ValueError("a sequence needs at least one value")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("sequence values must be finite")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def stop_index(self) -> int:
        """Index of the last element."""
        return self.start_index + len(self.values) - 1

    def __eq__(self, other) -> bool:
        return (isinstance(other, RealSequence) and self.start_index == other.start_index
                and np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash((self.start_index, self.values.tobytes()))


@dataclass(frozen=True, eq=False)
class UnitSequence:
    """Points of [0, 1), usually fractional parts of a RealSequence."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))
        v = self.values
        if len(v) and (not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() >= 1.0):
            raise ValueError("unit sequence values must lie in [0, 1)")

    def __len__(self) -> int:
        return len(self.values)

    def __eq__(self, other) -> bool:
        return isinstance(other, UnitSequence) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())


_FAMILIES = ("power", "nlog", "log", "linear", "file", "explicit")


@dataclass(frozen=True)
class SequenceSpec:
    """Descriptor of a sequence family; ``str(spec)`` gives the mini-language form."""

    family: str
    a: Expr | None = None
    c: Expr = field(default_factory=lambda: Expr("1"))
    theta: Expr = field(default_factory=lambda: Expr("0"))
    path: str | None = None
    values: tuple[float, ...] = ()
    start_index: int = 1

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == "power":
            if self.a is None:
                raise ValueError("power family needs an exponent a")
            if not float(self.a) > 0:
                raise ValueError("power family requires a > 0")
        if self.family == "linear" and not math.isfinite(float(self.theta)):
            raise ValueError("linear family requires a finite theta")
        if self.family == "file" and not self.path:
            raise ValueError("file family needs a path")
        if self.family == "explicit":
            if not self.values:
                raise ValueError("explicit family needs values")
            if not all(math.isfinite(v) for v in self.values):
                raise ValueError("explicit values must be finite")

    @classmethod
    def power(cls, a, c=1, theta=0) -> SequenceSpec:
        return cls("power", a=Expr(a), c=Expr(c), theta=Expr(theta))

    @classmethod
    def linear(cls, theta) -> SequenceSpec:
        return cls("linear", theta=Expr(theta))

    @classmethod
    def explicit(cls, values, start_index: int = 1) -> SequenceSpec:
        return cls("explicit", values=tuple(float(v) for v in values), start_index=start_index)

    def __str__(self) -> str:
        if self.family == "power":
            out = f"pow:a={self.a}"
            if self.c.text != "1":
                out += f",c={self.c}"
            if self.theta.text != "0":
                out += f",theta={self.theta}"
            return out
        if self.family == "linear":
            return f"linear:theta={self.theta}"
        if self.family == "file":
            return f"file:{self.path}"
        if self.family == "explicit":
            body = ",".join(repr(v) for v in self.values)
            return f"explicit:{body}" if self.start_index == 1 else f"explicit@{self.start_index}:{body}"
        return self.family

    @cached_property
    def closed_form(self) -> Family:
        """The evaluator for this spec (reads the file for ``file:`` specs)."""
        if self.family == "power":
            return PowerLaw(self.a, self.c, self.theta)
        if self.family == "linear":
            return PowerLaw(Expr("1"), Expr("0"), self.theta)
        if self.family == "nlog":
            return NLog()
        if self.family == "log":
            return Log()
        if self.family == "explicit":
            return DataSequence(self.values, self.start_index)
        return DataSequence(read_sequence_file(self.path), self.start_index)


def read_sequence_file(path: str | Path) -> np.ndarray:
    """One decimal per line, ``#`` starts a comment, blank lines ignored."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SequenceError(f"cannot read sequence file {path}: {exc}") from exc
    values = []
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        try:
            v = float(body)
        except ValueError:
            raise SequenceError(f"{path}:{lineno}: not a number: {body!r}") from None
        if not math.isfinite(v):
            raise SequenceError(f"{path}:{lineno}: value is not finite")
        values.append(v)
    if not values:
        raise SequenceError(f"{path}: no values")
    return np.array(values)


def parse_spec(text: str) -> SequenceSpec:
    """Parse ``pow:a=1.5``, ``nlog``, ``log``, ``linear:theta=...``, ``file:<path>``, ``explicit:1,2,3``."""
    text = text.strip()
    head, _, body = text.partition(":")
    head = head.strip().lower()
    start = 1
    if head.startswith("explicit@"):
        head, _, start_txt = head.partition("@")
        start = int(start_txt)
    try:
        if head in ("pow", "power"):
            params = _params(body)
            unknown = set(params) - {"a", "c", "theta"}
            if unknown:
                raise ValueError(f"unknown power parameters {sorted(unknown)}")
            if "a" not in params:
                raise ValueError("power family needs a=<exponent>")
            return SequenceSpec("power", a=Expr(params["a"]), c=Expr(params.get("c", "1")),
                                theta=Expr(params.get("theta", "0")))
        if head == "linear":
            params = _params(body)
            if set(params) != {"theta"}:
                raise ValueError("linear family takes exactly theta=<value>")
            return SequenceSpec("linear", theta=Expr(params["theta"]))
        if head in ("nlog", "log"):
            if body.strip():
                raise ValueError(f"{head} takes no parameters")
            return SequenceSpec(head)
        if head == "file":
            if not body.strip():
                raise ValueError("file family needs a path")
            return SequenceSpec("file", path=body.strip())
        if head == "explicit":
            vals = tuple(float(v) for v in body.replace(";", ",").split(",") if v.strip())
            return SequenceSpec("explicit", values=vals, start_index=start)
    except ExprError as exc:
        raise ValueError(str(exc)) from None
    raise ValueError(f"unknown sequence family in {text!r}")


def _params(body: str) -> dict[str, str]:
    out = {}
    for part in _split_top(body):
        if not part.strip():
            continue
        key, eq, val = part.partition("=")
        if not eq:
            raise ValueError(f"expected key=value, got {part!r}")
        out[key.strip().lower()] = val.strip()
    return out


def _split_top(body: str) -> list[str]:
    # commas inside parentheses belong to the expression
    parts, depth, cur = [], 0, []
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def _as_spec(spec: SequenceSpec | str) -> SequenceSpec:
    return parse_spec(spec) if isinstance(spec, str) else spec


def generate(spec: SequenceSpec | str, first: int, last: int) -> RealSequence:
    """x_first .. x_last as doubles (inclusive range)."""
    spec = _as_spec(spec)
    if not (1 <= first <= last):
        raise ValueError(f"invalid index range [{first}, {last}]")
    values = spec.closed_form.float_values(first, last)
    return RealSequence(first, values)


def generate_fractional(spec: SequenceSpec | str, first: int, last: int) -> UnitSequence:
    """Fractional parts of x_first .. x_last computed from the closed form.

    Unlike ``fractional_parts(generate(...))`` this keeps full precision at
    indices where x_n has no fractional bits left as a double.
    """
    spec = _as_spec(spec)
    if not (1 <= first <= last):
        raise ValueError(f"invalid index range [{first}, {last}]")
    fixed, _ = spec.closed_form.fixed_block(first, last - first + 1)
    return UnitSequence(fixed_to_float(fixed))


def forward_differences(x: RealSequence, order: int = 1) -> RealSequence:
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if len(x) < order + 1:
        raise ValueError(f"sequence too short for order-{order} differences")
    d = x.values
    for _ in range(order):
        d = d[1:] - d[:-1]
    return RealSequence(x.start_index, d)


_BELOW_ONE = np.nextafter(1.0, 0.0)


def fractional_parts(x: RealSequence) -> UnitSequence:
    """x - floor(x); negatives wrap upward (-0.75 -> 0.25)."""
    v = x.values
    fr = v - np.floor(v)
    # -tiny - floor(-tiny) rounds to 1.0; clamp to the largest double below 1
    fr = np.minimum(fr, _BELOW_ONE)
    return UnitSequence(fr)


@dataclass(frozen=True)
class MonotonicityProfile:
    kind: str  # weakly_decreasing | weakly_increasing | neither
    constant_K: float | None = None


def _decreasing_constant(v: np.ndarray) -> float | None:
    """Minimal K >= 1 with max_{j>k} v_j <= K min_{j<=k} v_j, or None."""
    if np.any(v < 0):
        return None
    head_min = np.minimum.accumulate(v)[:-1]
    tail_max = np.maximum.accumulate(v[::-1])[::-1][1:]
    k = 1.0
    for lo, hi in zip(head_min, tail_max):
        if hi == 0:
            continue
        if lo == 0:
            return None
        k = max(k, hi / lo)
    return float(k)


def monotonicity_profile(x: RealSequence | np.ndarray) -> MonotonicityProfile:
    v = x.values if isinstance(x, RealSequence) else np.asarray(x, dtype=np.float64)
    if len(v) < 2:
        raise ValueError("monotonicity needs at least two values")
    k = _decreasing_constant(v)
    if k is not None:
        return MonotonicityProfile("weakly_decreasing", k)
    k = _decreasing_constant(-v)
    if k is not None:
        return MonotonicityProfile("weakly_increasing", k)
    return MonotonicityProfile("neither", None)
