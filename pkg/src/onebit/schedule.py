"""Region geometry and per-region sample budgets.

Regions are measured in units of ``sigma_eff`` around the localization centre:
``R_i = centre + sigma_eff * [m_{i-1}, m_i)`` for ``i >= 1`` and the mirror
image for ``i <= -1``. The growth sequence ``m_i`` depends on the tail class.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List

from .core import Moment, ParamError, SubGaussian, TailClass, Variance

MIN_IMAX = 5


def _safe_exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def _next_m(tail: TailClass, i: int, prev: float) -> float:
    if prev == math.inf:
        return math.inf
    if isinstance(tail, Variance):
        return float(2**i) if i <= 4 else 2.0 * (prev - 3.0)
    if isinstance(tail, Moment):
        h = tail.k / 2
        if i <= 4:
            e = h**i
            return 2.0**e if e < 1024 else math.inf
        if not prev > 3:
            return math.nan
        try:
            return (prev - 3.0) ** h
        except OverflowError:
            return math.inf
    if isinstance(tail, SubGaussian):
        if i <= 4:
            return _safe_exp(prev * prev / 2.0)
        return _safe_exp((prev - 3.0) ** 2 / 4.0)
    raise TypeError(f"unknown tail class {tail!r}")


@lru_cache(maxsize=None)
def _m_table(tail: TailClass, upto: int) -> tuple:
    vals = [0.0]
    for i in range(1, upto + 1):
        vals.append(_next_m(tail, i, vals[-1]))
    return tuple(vals)


def m_value(tail: TailClass, i: int) -> float:
    """Region boundary ``m_i`` in sigma units; saturates to ``inf``."""
    if i < 0:
        raise ValueError("m_value needs i >= 0")
    i = int(i)
    # tables grow in blocks of 64 so repeated calls share one cache entry
    v = _m_table(tail, (i // 64 + 1) * 64)[i]
    if math.isnan(v):
        raise ParamError(f"m-sequence breaks down at i={i} for {tail!r}")
    return v


def m_value_exact(i: int) -> int:
    """Variance-class ``m_i`` by the literal integer recurrence (no closed form)."""
    m = [0, 2, 4, 8, 16]
    while len(m) <= i:
        m.append(2 * (m[-1] - 3))
    return m[i]


def _check_increasing(tail: TailClass, upto: int) -> None:
    prev = 0.0
    for i in range(1, upto + 1):
        cur = m_value(tail, i)
        if not cur > prev:
            raise ParamError(f"m-sequence is not increasing at i={i} for {tail!r}")
        if cur == math.inf:
            return
        prev = cur


def compute_i_max(tail: TailClass, sigma: float, eps: float) -> int:
    """Number of regions per side that must be estimated.

    Larger ``eps`` than ``sigma`` is clamped to ``sigma``. The result is
    never below 5 for any tail class.
    """
    eps = min(eps, sigma)
    if isinstance(tail, Variance):
        target = 5 * eps / (128 * sigma)
        i = MIN_IMAX
        while 2.0**-i > target:
            i += 1
        return i
    need = 8 * sigma / eps
    i = 1
    while m_value(tail, i + 1) < need:
        i += 1
    i = max(i, MIN_IMAX)
    _check_increasing(tail, i + 1)
    return i


@dataclass(frozen=True)
class Region:
    index: int
    a: float
    b: float
    centered_lo: float
    centered_hi: float
    left_closed: bool
    right_closed: bool

    def contains(self, x: float) -> bool:
        left = x >= self.a if self.left_closed else x > self.a
        right = x <= self.b if self.right_closed else x < self.b
        return left and right


def build_regions(center: float, sigma: float, tail: TailClass, i_max: int) -> List[Region]:
    """Finite regions ``R_{+-1} .. R_{+-i_max}``, negatives first.

    Positive regions are [a, b); negative ones are (a, b] except R_{-1},
    which is (a, b) so that the centre belongs to R_1 only. A region whose
    outer boundary saturated to infinity is left out and treated as tail.
    """
    out = []
    for i in range(-i_max, i_max + 1):
        if i == 0:
            continue
        k = abs(i)
        inner, outer = m_value(tail, k - 1), m_value(tail, k)
        if not math.isfinite(outer):
            continue
        if i > 0:
            clo, chi = sigma * inner, sigma * outer
            out.append(Region(i, center + clo, center + chi, clo, chi, True, False))
        else:
            clo, chi = -sigma * outer, -sigma * inner
            out.append(Region(i, center + clo, center + chi, clo, chi, False, i != -1))
    return out


def locate(regions: List[Region], x: float):
    """Index of the region containing ``x``, or ``"tail"``."""
    hits = [r.index for r in regions if r.contains(x)]
    if len(hits) > 1:
        raise AssertionError(f"{x} claimed by several regions: {hits}")
    return hits[0] if hits else "tail"


def region_budget(i: int, eps: float, delta: float, sigma: float, i_max: int, tail: TailClass):
    """``(eps_i, delta_i, n_i)`` for region ``i``.

    Hoeffding sizing for |i| <= 4, Bernstein sizing above, with leading
    constant 8/m_i^2 (variance class) or 2/m_i^2 (moment and sub-Gaussian).
    """
    k = abs(i)
    if not 1 <= k <= i_max:
        raise ParamError(f"region index {i} outside 1..{i_max}")
    eps = min(eps, sigma)
    m_in, m_out = m_value(tail, k - 1), m_value(tail, k)
    if not math.isfinite(m_out):
        raise ParamError(f"region {i} is unbounded")
    delta_i = delta / (4 * i_max)
    eps_i = eps / ((2 * i_max) * sigma * (m_in + m_out))
    log_term = math.log(2 / delta_i)
    if k <= 4:
        n_i = math.ceil(log_term / (2 * eps_i**2))
    else:
        c = 8.0 if isinstance(tail, Variance) else 2.0
        n_i = math.ceil((c / m_out**2 / eps_i**2 + (2.0 / 3.0) / eps_i) * log_term)
    return eps_i, delta_i, max(1, n_i)


@dataclass(frozen=True)
class BudgetRow:
    region: Region
    eps_i: float
    delta_i: float
    n_i: int


@dataclass(frozen=True)
class RegionSchedule:
    tail: TailClass
    i_max: int
    sigma: float
    eps: float
    delta: float
    center: float
    rows: tuple

    @property
    def n_ref(self) -> int:
        return sum(2 * r.n_i for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "a", "b", "eps_i", "delta_i", "n_i"])
        for r in self.rows:
            w.writerow([r.region.index, repr(r.region.a), repr(r.region.b),
                        repr(r.eps_i), repr(r.delta_i), r.n_i])
        return buf.getvalue()


def make_schedule(center: float, sigma: float, eps: float, delta: float, tail: TailClass) -> RegionSchedule:
    i_max = compute_i_max(tail, sigma, eps)
    regions = build_regions(center, sigma, tail, i_max)
    rows = []
    for reg in regions:
        e_i, d_i, n_i = region_budget(reg.index, eps, delta, sigma, i_max, tail)
        rows.append(BudgetRow(reg, e_i, d_i, n_i))
    return RegionSchedule(tail, i_max, sigma, min(eps, sigma), delta, center, tuple(rows))


def total_refinement_cost(eps: float, delta: float, sigma: float, tail: TailClass) -> int:
    """Samples spent on refinement: two batches of n_i for every region."""
    return make_schedule(0.0, sigma, eps, delta, tail).n_ref
