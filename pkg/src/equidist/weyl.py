"""Weyl exponential sums S_N(h) = (1/N) sum_k exp(2 pi i h x_k)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .seqlab.core import RealSequence, SequenceSpec, _as_spec
from .seqlab.families import float_to_fixed


@dataclass(frozen=True)
class WeylPoint:
    h: int
    N: int
    sum: complex
    magnitude: float


def _phase_sum(fixed: np.ndarray, h: int) -> complex:
    # h * x mod 1 in wrapping uint64 arithmetic; exact for any integer h
    w = fixed * np.uint64(h % (1 << 64))
    turns = (w >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    ang = 2.0 * math.pi * turns
    return complex(math.fsum(np.cos(ang)), math.fsum(np.sin(ang)))


def _point(fixed: np.ndarray, h: int) -> WeylPoint:
    n = len(fixed)
    s = _phase_sum(fixed, h) / n
    mag = min(abs(s), 1.0)
    return WeylPoint(h, n, s, mag)


def weyl_sum(x: RealSequence, h: int) -> WeylPoint:
    """Normalized Weyl sum of the values of ``x`` (phases reduced modulo one first)."""
    h = int(h)
    if h == 0:
        raise ValueError("h must be a nonzero integer")
    return _point(float_to_fixed(x.values), h)


def weyl_sum_spec(spec: SequenceSpec | str, h: int, N: int, first: int = 1) -> WeylPoint:
    """S_N(h) for x_first .. x_{first+N-1} generated from the closed form."""
    if h == 0:
        raise ValueError("h must be a nonzero integer")
    fixed, _ = _as_spec(spec).closed_form.fixed_block(first, N)
    return _point(fixed, int(h))


def weyl_profile(spec: SequenceSpec | str, h_max: int, n_grid, hs=None) -> list[WeylPoint]:
    """WeylPoint for every 1 <= |h| <= h_max (or each h in ``hs``) and N in n_grid."""
    if hs is None:
        if h_max < 1:
            raise ValueError("h_max must be >= 1")
        hs = [*range(-h_max, 0), *range(1, h_max + 1)]
    hs = [int(h) for h in hs]
    if not hs or any(h == 0 for h in hs):
        raise ValueError("h values must be nonzero")
    grid = [int(n) for n in n_grid]
    if not grid or grid[0] < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("n_grid must be a strictly increasing list of positive integers")
    fixed, _ = _as_spec(spec).closed_form.fixed_block(1, grid[-1])
    rows = []
    for h in hs:
        for n in grid:
            rows.append(_point(fixed[:n], h))
    return rows
