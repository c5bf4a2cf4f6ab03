"""Coarse localization: an O(sigma) interval that contains the mean.

Two protocols:

* ``median_localize_adaptive`` -- binary search for the median on the sigma
  grid of [-lam, lam] with repeated threshold queries per step. Uses
  S = ceil(log2(2 lam / sigma)) rounds of adaptivity.
* ``gray_localize`` -- non-adaptive: K groups of J Gray-function queries,
  majority vote per group, Gray decoding and widening.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence


from .agent import Agent
from .core import GrayQuery, IntervalQuery, ParamError

GAMMA = 0.01


@dataclass(frozen=True)
class CenterInterval:
    center: float
    half_width: float
    claimed_coverage: float
    samples: int
    method: str
    bits: tuple = field(default=())

    @property
    def lo(self) -> float:
        return self.center - self.half_width

    @property
    def hi(self) -> float:
        return self.center + self.half_width

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


def adaptive_plan(lam: float, sigma: float, delta: float, gamma: float = GAMMA):
    """Return ``(grid_cells, steps, reps)`` for the adaptive localizer."""
    cells = max(1, round(2 * lam / sigma))
    steps = max(1, math.ceil(math.log2(cells) - 1e-12))
    reps = math.ceil(math.log(4 * steps / delta) / (2 * gamma**2))
    return cells, steps, reps


def adaptive_cost(lam: float, sigma: float, delta: float, gamma: float = GAMMA) -> int:
    _, steps, reps = adaptive_plan(lam, sigma, delta, gamma)
    return steps * reps


def median_localize_adaptive(agent: Agent, lam: float, sigma: float, delta: float,
                             gamma: float = GAMMA) -> CenterInterval:
    """Noisy binary search for the median, then a 6-sigma window around it.

    Each step estimates F(x) = Pr(X <= x) at the bracket midpoint from
    ``reps`` threshold queries (Hoeffding at accuracy ``gamma``, failure
    delta / (2 S) per step) and moves right when the estimate is below
    0.5 - gamma/2.
    """
    cells, steps, reps = adaptive_plan(lam, sigma, delta, gamma)
    lo_i, hi_i = 0, cells
    threshold = 0.5 - gamma / 2
    with agent.stage("localize"):
        for _ in range(steps):
            # a finished bracket still spends its queries so the cost is exactly S * reps
            mid = (lo_i + hi_i) // 2 if hi_i - lo_i > 1 else lo_i
            x = -lam + mid * sigma
            ones = agent.count_repeated(IntervalQuery(-math.inf, x), reps)
            if hi_i - lo_i <= 1:
                continue
            if ones / reps < threshold:
                lo_i = mid
            else:
                hi_i = mid
    low = -lam + lo_i * sigma
    up = -lam + hi_i * sigma
    center = 0.5 * (low + up)
    return CenterInterval(center, 3.0 * sigma, 1.0 - delta, steps * reps, "adaptive")


@dataclass(frozen=True)
class GrayPlan:
    K: int
    J: int

    @property
    def samples(self) -> int:
        return self.K * self.J


def gray_plan(lam: float, sigma: float, delta: float) -> GrayPlan:
    ratio = 2 * lam / sigma
    if ratio < 16 * (1 - 1e-12):
        raise ParamError(f"Gray localization needs 2*lambda/sigma >= 16, got {ratio}")
    K = math.floor(math.log2(ratio) - 3 + 1e-12)
    J = math.ceil(8 * math.log(3 * K / delta))
    return GrayPlan(K, J)


def gray_decode(bits: Sequence[int]) -> float:
    """Left end ``x0`` of the dyadic cell [x0, x0 + 2^-K] with Gray code ``bits``."""
    d, x0 = 0, 0.0
    for k, z in enumerate(bits, start=1):
        d ^= int(z)
        x0 += d * 2.0**-k
    return x0


def gray_encode(x: float, K: int) -> tuple:
    """Gray bits (g_1(x), ..., g_K(x)); inverse of ``gray_decode`` on cell interiors."""
    cell = min(int(math.floor(x * 2**K)), 2**K - 1)
    return tuple(((cell >> (K - k)) ^ (cell >> (K - k + 1))) & 1 for k in range(1, K + 1))


def widen(x0: float, K: int) -> tuple:
    pad = 2.0 ** -(K + 2)
    return max(0.0, x0 - pad), min(1.0, x0 + 2.0**-K + pad)


def gray_interval_from_bits(bits: Sequence[int], lam: float) -> tuple:
    K = len(bits)
    lo_p, hi_p = widen(gray_decode(bits), K)
    return 2 * lam * lo_p - lam, 2 * lam * hi_p - lam


def gray_localize(agent: Agent, lam: float, sigma: float, delta: float) -> CenterInterval:
    """Non-adaptive Gray-code localization; covers the mean w.p. >= 1 - delta/2."""
    plan = gray_plan(lam, sigma, delta)
    bits = []
    with agent.stage("localize"):
        # all K*J queries are fixed before any answer is seen
        for k in range(1, plan.K + 1):
            ones = agent.count_repeated(GrayQuery(k, lam), plan.J)
            bits.append(1 if ones >= plan.J / 2 else 0)
    lo, hi = gray_interval_from_bits(bits, lam)
    return CenterInterval(0.5 * (lo + hi), 0.5 * (hi - lo), 1.0 - delta / 2,
                          plan.samples, "gray", tuple(bits))
