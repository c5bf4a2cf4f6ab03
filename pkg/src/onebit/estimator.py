"""End-to-end 1-bit mean estimators built from localize + schedule + refine."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .agent import Agent, BudgetExhausted
from .core import (IntervalQuery, ParamError, ProblemParams, TailClass, Variance, derive_seed,
                   substream, validate_params)
from .localize import (CenterInterval, adaptive_cost, adaptive_plan, gray_localize,
                       median_localize_adaptive)
from .refine import aggregate, estimate_region
from .schedule import make_schedule


@dataclass
class EstimateReport:
    variant: str
    mu_hat: float
    samples_localization: int
    samples_refinement: int
    samples_total: int
    center: float
    half_width: float
    sigma_eff: float
    i_max: Optional[int]
    rounds_of_adaptivity: int
    regions: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def _refinement(agent: Agent, center: float, sigma_eff: float, eps: float, delta: float,
                tail: TailClass, seed: int, label) -> tuple:
    """Steps 3-5 around ``center``; returns ``(mu_hat, schedule, rows)``."""
    sched = make_schedule(center, sigma_eff, eps, delta, tail)
    ests, rows = [], []
    for row in sched.rows:
        rng = substream(seed, ("refine", label, row.region.index))
        est = estimate_region(agent, row.region, row.n_i, rng)
        ests.append(est)
        rows.append({
            "i": row.region.index, "a": row.region.a, "b": row.region.b,
            "eps_i": row.eps_i, "delta_i": row.delta_i, "n_i": row.n_i,
            "p_hat_a": est.p_hat_a, "p_hat_b": est.p_hat_b, "mu_hat_i": est.mu_hat_i,
        })
    return aggregate(center, ests), sched, rows


def _localize(agent: Agent, p: ProblemParams, localizer: str, delta_loc: float) -> CenterInterval:
    if localizer == "adaptive":
        return median_localize_adaptive(agent, p.lam, p.sigma, delta_loc)
    if localizer == "gray":
        # the Gray protocol's own guarantee is 1 - delta/2, so it gets the full delta
        return gray_localize(agent, p.lam, p.sigma, 2 * delta_loc)
    raise ParamError(f"unknown localizer {localizer!r}")


def _rounds(loc: CenterInterval, p: ProblemParams) -> int:
    if loc.method == "gray":
        return 2
    _, steps, _ = adaptive_plan(p.lam, p.sigma, 1.0)
    return steps + 1


def estimate_mean_main(agent: Agent, params: ProblemParams, tail: TailClass = Variance(),
                       localizer: str = "adaptive", seed: int = 0) -> EstimateReport:
    """Localize, schedule regions, refine, aggregate.

    The failure budget is split evenly between localization and refinement.
    If the localizer returns a window wider than 3 sigma, the schedule runs
    with ``sigma_eff = half_width / 3``.
    """
    p = validate_params(params)
    start = agent.samples_used
    loc = _localize(agent, p, localizer, p.delta / 2)
    after_loc = agent.samples_used
    sigma_eff = max(p.sigma, loc.half_width / 3)
    mu_hat, sched, rows = _refinement(agent, loc.center, sigma_eff, p.eps, p.delta / 2, tail, seed, "main")
    end = agent.samples_used
    assert end - after_loc == sched.n_ref
    variant = {"variance": "main", "moment": "moment", "subgaussian": "subgauss"}[tail.name]
    if localizer == "gray":
        variant = "two-stage"
    return EstimateReport(
        variant=variant, mu_hat=mu_hat,
        samples_localization=after_loc - start, samples_refinement=end - after_loc,
        samples_total=end - start, center=loc.center, half_width=loc.half_width,
        sigma_eff=sigma_eff, i_max=sched.i_max, rounds_of_adaptivity=_rounds(loc, p),
        regions=rows, meta={"tail": tail.to_dict(), "localizer": localizer,
                            "params": p.to_dict(), "gray_bits": list(loc.bits)})


def estimate_two_stage(agent: Agent, params: ProblemParams, tail: TailClass = Variance(),
                       seed: int = 0) -> EstimateReport:
    """Gray-code localization (round 1) then one non-adaptive refinement batch (round 2)."""
    return estimate_mean_main(agent, params, tail, localizer="gray", seed=seed)


# ---------------------------------------------------------------------------
# Unknown target accuracy
# ---------------------------------------------------------------------------


def anytime_delta(delta: float, tau: int) -> float:
    return 6.0 * delta / (math.pi**2 * tau**2)


def estimate_anytime(agent: Agent, delta: float, lam: float, sigma: float,
                     tail: TailClass = Variance(), seed: int = 0, max_rounds: int = 64) -> EstimateReport:
    """Halving schedule eps_tau = sigma / 2^tau until the agent's budget runs out.

    Returns the estimate of the last round that completed; its accuracy is
    ``eps_T``. With no completed round the localization centre is returned
    with accuracy equal to the localization half-width.
    """
    if agent.budget is None:
        raise ParamError("the anytime estimator needs an agent with a finite budget")
    p = validate_params(ProblemParams(lam, sigma, sigma, delta))
    n_loc = adaptive_cost(p.lam, p.sigma, p.delta / 2)
    if agent.remaining < n_loc:
        raise ParamError(f"insufficient budget for localization ({agent.remaining} < {n_loc})")
    start = agent.samples_used
    loc = median_localize_adaptive(agent, p.lam, p.sigma, p.delta / 2)
    after_loc = agent.samples_used
    mu_hat, eps_T, T = loc.center, loc.half_width, 0
    rows, rounds = [], []
    delta_ref = p.delta / 2
    for tau in range(1, max_rounds + 1):
        eps_tau = p.sigma / 2**tau
        d_tau = anytime_delta(delta_ref, tau)
        try:
            m, sched, r = _refinement(agent, loc.center, p.sigma, eps_tau, d_tau, tail, seed, ("anytime", tau))
        except BudgetExhausted:
            break
        mu_hat, eps_T, T, rows = m, eps_tau, tau, r
        rounds.append({"tau": tau, "eps": eps_tau, "delta": d_tau, "n_ref": sched.n_ref, "mu_hat": m})
    end = agent.samples_used
    assert end <= agent.budget
    return EstimateReport(
        variant="anytime", mu_hat=mu_hat,
        samples_localization=after_loc - start, samples_refinement=end - after_loc,
        samples_total=end - start, center=loc.center, half_width=loc.half_width,
        sigma_eff=p.sigma, i_max=None, rounds_of_adaptivity=_rounds(loc, p) - 1 + len(rounds),
        regions=rows, meta={"T": T, "eps_T": eps_T, "rounds": rounds, "n_loc": n_loc,
                            "budget": agent.budget})


# ---------------------------------------------------------------------------
# Unknown variance
# ---------------------------------------------------------------------------


@dataclass
class VarianceLadder:
    T: int
    sigmas: List[float]
    estimates: List[float]
    half_widths: List[float]
    feasible: List[bool]
    i_star: int


def ladder_size(sigma_min: float, sigma_max: float) -> int:
    return max(0, math.ceil(math.log2(sigma_max / sigma_min) - 1e-12))


def _feasible(i: int, mu: Sequence[float], w: Sequence[float], upto: int) -> bool:
    return all(abs(mu[i] - mu[j]) <= w[i] + w[j] for j in range(i + 1, upto + 1))


def select_rung(run, widths: Sequence[float], top_down: bool = False) -> tuple:
    """Pick the ladder index from per-rung estimates ``run(i)``.

    Bottom-up evaluates every rung and returns the smallest feasible one.
    Top-down evaluates from the top and stops at the first infeasible rung.
    Returns ``(i_star, estimates, feasible)``; unevaluated rungs hold None.
    """
    T = len(widths) - 1
    mu: List[Optional[float]] = [None] * (T + 1)
    if not top_down:
        for i in range(T + 1):
            mu[i] = run(i)
        feas = [_feasible(i, mu, widths, T) for i in range(T + 1)]
        return feas.index(True), mu, feas
    feas = [False] * (T + 1)
    i_star = T
    for i in range(T, -1, -1):
        mu[i] = run(i)
        if not _feasible(i, mu, widths, T):
            break
        feas[i] = True
        i_star = i
    return i_star, mu, feas


def estimate_unknown_variance(agent: Agent, r: float, delta: float, lam: float,
                              sigma_min: float, sigma_max: float, seed: int = 0,
                              top_down: bool = False) -> EstimateReport:
    """Run the main estimator on the ladder sigma_i = sigma_min * 2^i and
    return the smallest rung whose interval meets every coarser one.

    ``top_down=True`` walks the ladder from the top and stops at the first
    infeasible rung, returning the rung above it.
    """
    if not (0 < sigma_min <= sigma_max <= lam):
        raise ParamError("need 0 < sigma_min <= sigma_max <= lambda")
    if not 0 < r < 1:
        raise ParamError("r must lie in (0, 1)")
    T = ladder_size(sigma_min, sigma_max)
    sigmas = [sigma_min * 2**i for i in range(T + 1)]
    widths = [r * s / 5 for s in sigmas]
    reports: List[Optional[EstimateReport]] = [None] * (T + 1)
    start = agent.samples_used

    def run(i):
        s = sigmas[i]
        rep = estimate_mean_main(agent, ProblemParams(max(lam, s), s, widths[i], delta / (T + 1)),
                                 seed=derive_seed(seed, ("rung", i)))
        reports[i] = rep
        return rep.mu_hat

    i_star, mu, feas = select_rung(run, widths, top_down)
    done = [rep for rep in reports if rep is not None]
    ladder = VarianceLadder(T, sigmas, mu, widths, feas, i_star)
    chosen = reports[i_star]
    return EstimateReport(
        variant="unknown-variance", mu_hat=chosen.mu_hat,
        samples_localization=sum(x.samples_localization for x in done),
        samples_refinement=sum(x.samples_refinement for x in done),
        samples_total=agent.samples_used - start, center=chosen.center,
        half_width=chosen.half_width, sigma_eff=chosen.sigma_eff, i_max=chosen.i_max,
        rounds_of_adaptivity=sum(x.rounds_of_adaptivity for x in done),
        regions=chosen.regions,
        meta={"i_star": i_star, "ladder": asdict(ladder), "top_down": top_down, "r": r})


# ---------------------------------------------------------------------------
# Multivariate
# ---------------------------------------------------------------------------


@dataclass
class MultivariateReport:
    mu_hat: np.ndarray
    coordinates: List[EstimateReport]

    @property
    def samples_total(self) -> int:
        return sum(c.samples_total for c in self.coordinates)

    def to_dict(self) -> dict:
        return {"variant": "multivariate", "mu_hat": [float(v) for v in self.mu_hat],
                "samples_total": self.samples_total,
                "coordinates": [c.to_dict() for c in self.coordinates]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, **kw)


def estimate_multivariate(agents: Sequence[Agent], eps: float, delta: float, lam: float,
                          sigma: float, tail: TailClass = Variance(), seed: int = 0) -> MultivariateReport:
    """Coordinate-wise estimation at (eps / sqrt(d), delta / d); l2 error <= eps w.p. 1 - delta."""
    d = len(agents)
    if d < 1:
        raise ParamError("need at least one coordinate")
    reps = []
    for c, ag in enumerate(agents):
        sub_seed = derive_seed(seed, ("coord", c))
        reps.append(estimate_mean_main(ag, ProblemParams(lam, sigma, eps / math.sqrt(d), delta / d),
                                       tail, seed=sub_seed))
    return MultivariateReport(np.array([r.mu_hat for r in reps]), reps)


# ---------------------------------------------------------------------------
# Non-adaptive baseline
# ---------------------------------------------------------------------------


def nonadaptive_baseline(agent: Agent, params: ProblemParams, n: int) -> EstimateReport:
    """Fixed interval queries spread over every centre of the hard-instance grid.

    Location j gets floor(n / 2N) queries ``[c_j, c_j + sigma]`` (upper atom)
    and as many ``[c_j - sigma, c_j)`` (lower atom). The centre with the most
    hits wins; the sign comes from the upper-atom frequency against 1/2.
    """
    p = validate_params(params)
    N = round(p.lam / p.sigma) - 1
    if N < 1:
        raise ParamError("lambda/sigma must be at least 2 for the grid of centres")
    per = n // (2 * N)
    if per < 1:
        raise ParamError(f"budget below one query per location (n={n} < 2N={2 * N})")
    start = agent.samples_used
    up = np.zeros(N + 1, dtype=np.int64)
    down = np.zeros(N + 1, dtype=np.int64)
    with agent.stage("nonadaptive"):
        for j in range(1, N + 1):
            c = -p.lam + 2 * j * p.sigma
            up[j] = agent.count_repeated(IntervalQuery(c, c + p.sigma), per)
            down[j] = agent.count_repeated(IntervalQuery(c - p.sigma, c, True, False), per)
    hits = up + down
    hits[0] = -1
    j_hat = int(np.argmax(hits))
    sign = 1 if up[j_hat] / per >= 0.5 else -1
    c_hat = -p.lam + 2 * j_hat * p.sigma
    used = agent.samples_used - start
    return EstimateReport(
        variant="nonadaptive", mu_hat=c_hat + sign * p.eps,
        samples_localization=0, samples_refinement=used, samples_total=used,
        center=c_hat, half_width=p.sigma, sigma_eff=p.sigma, i_max=None,
        rounds_of_adaptivity=1, regions=[],
        meta={"j_hat": j_hat, "sign": sign, "per_query": per, "N": N})
