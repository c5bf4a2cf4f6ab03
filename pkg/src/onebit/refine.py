"""Region-wise refinement with randomized interval queries.

For a region ``<a, b>`` and ``T ~ Unif(a, b)``, the probabilities
``p_a = Pr(X in <a, T])`` and ``p_b = Pr(X in [T, b>)`` satisfy
``a p_a + b p_b = E[X 1{X in region}]``. Each is estimated from its own
batch of ``n_i`` one-bit answers with a fresh ``T`` per query.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .agent import Agent
from .schedule import Region


@dataclass(frozen=True)
class RegionEstimate:
    i: int
    p_hat_a: float
    p_hat_b: float
    mu_hat_i: float
    n_i: int
    ones_a: int
    ones_b: int


def estimate_region(agent: Agent, region: Region, n_i: int, rng: np.random.Generator) -> RegionEstimate:
    """Consume exactly ``2 * n_i`` samples and return the region's contribution.

    ``mu_hat_i`` is expressed relative to the localization centre, i.e. it
    uses the centred endpoints.
    """
    if n_i < 1:
        raise ValueError("n_i must be >= 1")
    lc, rc = region.left_closed, region.right_closed
    with agent.stage("refine"):
        ones_a = agent.count_randomized(region.a, region.b, "a", n_i, rng, lc, rc)
        ones_b = agent.count_randomized(region.a, region.b, "b", n_i, rng, lc, rc)
    p_a = ones_a / n_i
    p_b = ones_b / n_i
    mu_i = region.centered_lo * p_a + region.centered_hi * p_b
    return RegionEstimate(region.index, p_a, p_b, mu_i, n_i, ones_a, ones_b)


def aggregate(center: float, estimates: Iterable[RegionEstimate]) -> float:
    """Centre plus the sum of centred region contributions; tails count as 0."""
    return center + float(sum(e.mu_hat_i for e in estimates))


def sq_round(x: float, region: Region, rng: np.random.Generator) -> Optional[float]:
    """Binary stochastic quantizer for ``region``; ``None`` when ``x`` is outside.

    Inside the region, returns ``a`` with probability ``(b - x)/(b - a)`` and
    ``b`` otherwise. Only used to cross-check the randomized queries.
    """
    if not region.contains(x):
        return None
    a, b = region.a, region.b
    return a if rng.random() < (b - x) / (b - a) else b


def sq_round_many(x: np.ndarray, region: Region, rng: np.random.Generator) -> np.ndarray:
    """Vectorised ``sq_round``: 0 outside, -1 rounded to ``a``, +1 rounded to ``b``."""
    x = np.asarray(x, dtype=float)
    a, b = region.a, region.b
    inside = (x >= a if region.left_closed else x > a) & (x <= b if region.right_closed else x < b)
    down = rng.random(x.shape) < (b - x) / (b - a)
    return np.where(inside, np.where(down, -1, 1), 0).astype(np.int8)
