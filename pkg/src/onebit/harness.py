"""Experiment configs, the Monte Carlo trial runner and the sweeps.

Configs are JSON documents checked against ``CONFIG_SCHEMA``. Every trial
gets its own seed derived from ``(master_seed, trial index)`` by stable
hashing, so results do not depend on the number of worker processes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import jsonschema
import numpy as np
from scipy import stats

from .agent import Agent, BudgetExhausted
from .core import (Moment, ParamError, ProblemParams, SubGaussian, TailClass, Variance, derive_seed,
                   substream, tail_from_dict, validate_params)
from .distributions import make_hard_instance, spec_from_dict
from .estimator import (EstimateReport, estimate_anytime, estimate_mean_main, estimate_multivariate,
                        estimate_two_stage, estimate_unknown_variance, nonadaptive_baseline)
from .localize import adaptive_cost, gray_localize, gray_plan, median_localize_adaptive
from .schedule import compute_i_max, total_refinement_cost

VARIANTS = ("main", "moment", "subgauss", "anytime", "unknown-variance", "two-stage", "multivariate")

TRIAL_COLUMNS = ["trial", "seed", "mu_true", "mu_hat", "error", "tolerance", "failed",
                 "samples_localization", "samples_refinement", "samples_total"]
SWEEP_COLUMNS = ["sigma_over_eps", "tail", "i_max", "n_loc", "n_ref", "n_total"]
GAP_COLUMNS = ["budget", "adaptive_fail", "nonadaptive_fail"]

_DIST = {
    "type": "object",
    "required": ["kind"],
    "properties": {"kind": {"enum": ["point_mass", "two_point", "uniform", "gaussian",
                                     "student_t", "hard_instance"]}},
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["params", "trials", "master_seed"],
    "additionalProperties": False,
    "properties": {
        "variant": {"enum": list(VARIANTS)},
        "params": {
            "type": "object",
            "required": ["lambda", "sigma", "eps", "delta"],
            "additionalProperties": False,
            "properties": {k: {"type": "number"} for k in ("lambda", "sigma", "eps", "delta")},
        },
        "distribution": _DIST,
        "distributions": {"type": "array", "items": _DIST, "minItems": 1},
        "tail": {"type": "object",
                 "properties": {"kind": {"enum": ["variance", "moment", "subgaussian"]},
                                "k": {"type": "number"}}},
        "localizer": {"enum": ["adaptive", "gray"]},
        "mode": {"enum": ["exact", "aggregate"]},
        "trials": {"type": "integer", "minimum": 1},
        "master_seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "output": {"type": ["string", "null"]},
        "options": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "budget": {"type": "integer", "minimum": 0},
                "r": {"type": "number"},
                "sigma_min": {"type": "number"},
                "sigma_max": {"type": "number"},
                "top_down": {"type": "boolean"},
            },
        },
    },
}


class ConfigError(ValueError):
    """Config could not be parsed or failed validation."""


@dataclass
class ExperimentConfig:
    variant: str
    params: ProblemParams
    distributions: list
    trials: int
    master_seed: int
    tail: TailClass = Variance()
    localizer: str = "adaptive"
    mode: str = "exact"
    output: Optional[str] = None
    options: dict = field(default_factory=dict)

    @property
    def distribution(self):
        return self.distributions[0]

    def with_seed(self, seed: int) -> "ExperimentConfig":
        d = dict(self.__dict__)
        d["master_seed"] = int(seed)
        return ExperimentConfig(**d)

    def to_dict(self) -> dict:
        d = {"variant": self.variant, "params": self.params.to_dict(), "trials": self.trials,
             "master_seed": self.master_seed, "tail": self.tail.to_dict(),
             "localizer": self.localizer, "mode": self.mode, "output": self.output}
        if self.variant == "multivariate":
            d["distributions"] = [s.to_dict() for s in self.distributions]
        else:
            d["distribution"] = self.distribution.to_dict()
        if self.options:
            d["options"] = dict(self.options)
        return d


def _line_of(text: str, path) -> int:
    """Best-effort line number for a JSON path: first line mentioning its last key."""
    keys = [p for p in path if isinstance(p, str)]
    if not keys:
        return 1
    needle = f'"{keys[-1]}"'
    for no, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return no
    return 1


def parse_config(text: str) -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"line {_line_of(text, e.absolute_path)}: {where}: {e.message}") from None
    variant = raw.get("variant", "main")
    try:
        params = validate_params(ProblemParams.from_dict(raw["params"]))
        if variant == "multivariate":
            if "distributions" not in raw:
                raise ConfigError("multivariate configs need a 'distributions' list")
            dists = [spec_from_dict(d) for d in raw["distributions"]]
        else:
            if "distribution" not in raw:
                raise ConfigError("config needs a 'distribution'")
            dists = [spec_from_dict(raw["distribution"])]
        tail = tail_from_dict(raw.get("tail"))
    except (ParamError, TypeError, KeyError) as e:
        raise ConfigError(f"line {_line_of(text, ['params'])}: {e}") from None
    if variant == "moment" and not isinstance(tail, Moment):
        tail = Moment(4.0)
    elif variant == "subgauss":
        tail = SubGaussian()
    elif variant == "main":
        tail = Variance()
    return ExperimentConfig(variant, params, dists, int(raw["trials"]), int(raw["master_seed"]),
                            tail, raw.get("localizer", "adaptive"), raw.get("mode", "exact"),
                            raw.get("output"), dict(raw.get("options", {})))


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


# ---------------------------------------------------------------------------
# Single runs
# ---------------------------------------------------------------------------


def run_estimate(config: ExperimentConfig, seed: Optional[int] = None):
    """One estimator run for ``config``; returns ``(report, mu_true, tolerance)``."""
    seed = config.master_seed if seed is None else int(seed)
    p, opt = config.params, config.options
    mk = lambda spec, label: Agent(spec, substream(seed, ("agent", label)),  # noqa: E731
                                   budget=opt.get("budget"), mode=config.mode)
    v = config.variant
    if v == "multivariate":
        agents = [mk(s, c) for c, s in enumerate(config.distributions)]
        rep = estimate_multivariate(agents, p.eps, p.delta, p.lam, p.sigma, config.tail, seed=seed)
        return rep, np.array([s.mean() for s in config.distributions]), p.eps
    spec = config.distribution
    agent = mk(spec, 0)
    if v in ("main", "moment", "subgauss"):
        rep = estimate_mean_main(agent, p, config.tail, config.localizer, seed=seed)
        tol = p.eps
    elif v == "two-stage":
        rep = estimate_two_stage(agent, p, config.tail, seed=seed)
        tol = p.eps
    elif v == "anytime":
        if agent.budget is None:
            raise ConfigError("the anytime variant needs options.budget")
        rep = estimate_anytime(agent, p.delta, p.lam, p.sigma, config.tail, seed=seed)
        tol = rep.meta["eps_T"]
    elif v == "unknown-variance":
        r = float(opt.get("r", 0.5))
        rep = estimate_unknown_variance(agent, r, p.delta, p.lam, float(opt.get("sigma_min", p.sigma)),
                                        float(opt.get("sigma_max", p.sigma)), seed=seed,
                                        top_down=bool(opt.get("top_down", False)))
        # below sigma_min the law is still in the sigma_min family, so that scale applies
        tol = r * max(math.sqrt(spec.variance()), float(opt.get("sigma_min", p.sigma)))
    else:
        raise ConfigError(f"unknown variant {v!r}")
    return rep, spec.mean(), tol


def _vec(v):
    a = np.atleast_1d(np.asarray(v, dtype=float))
    return float(a[0]) if a.size == 1 else ";".join(repr(float(x)) for x in a)


def _trial(args) -> dict:
    config, t = args
    seed = derive_seed(config.master_seed, ("trial", t))
    rep, mu, tol = run_estimate(config, seed)
    err = float(np.linalg.norm(np.atleast_1d(rep.mu_hat) - np.atleast_1d(mu)))
    parts = rep.coordinates if not isinstance(rep, EstimateReport) else [rep]
    return {
        "trial": t, "seed": seed, "mu_true": _vec(mu), "mu_hat": _vec(rep.mu_hat),
        "error": err, "tolerance": float(tol), "failed": int(err > tol),
        "samples_localization": sum(c.samples_localization for c in parts),
        "samples_refinement": sum(c.samples_refinement for c in parts),
        "samples_total": rep.samples_total,
    }


# ---------------------------------------------------------------------------
# Trials
# ---------------------------------------------------------------------------


def clopper_pearson_upper(k: int, n: int, level: float = 0.95) -> float:
    """One-sided exact binomial upper confidence bound for k successes in n."""
    if not 0 <= k <= n or n < 1:
        raise ValueError("need 0 <= k <= n and n >= 1")
    if k == n:
        return 1.0
    return float(stats.beta.ppf(level, k + 1, n - k))


@dataclass
class TrialSummary:
    trials: int
    failures: int
    failure_rate: float
    clopper_pearson_upper_95: float
    mean_samples_total: float
    max_samples_total: int
    delta: float
    passed: bool
    wall_time: float = 0.0

    def to_dict(self, include_time: bool = False) -> dict:
        d = dict(self.__dict__)
        if not include_time:
            d.pop("wall_time")
        return d


def resolve_workers(workers: Optional[int] = None) -> int:
    if workers is None:
        env = os.environ.get("ONEBIT_WORKERS")
        workers = int(env) if env else 1
    return max(1, int(workers))


def summarize(rows: Sequence[dict], delta: float, wall_time: float = 0.0) -> TrialSummary:
    n = len(rows)
    k = sum(int(r["failed"]) for r in rows)
    s = [int(r["samples_total"]) for r in rows]
    return TrialSummary(n, k, k / n, clopper_pearson_upper(k, n), float(np.mean(s)), max(s),
                        delta, k / n <= delta, wall_time)


def trials_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, TRIAL_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in sorted(rows, key=lambda r: r["trial"]):
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def run_trials(config: ExperimentConfig, workers: Optional[int] = None,
               out: Optional[str] = None) -> tuple:
    """Run ``config.trials`` independent trials; returns ``(summary, rows)``.

    With an output directory, writes ``trials.csv`` and ``summary.json``
    there. Neither file contains timing, so reruns are byte-identical.
    """
    t0 = time.perf_counter()
    jobs = [(config, t) for t in range(config.trials)]
    nw = resolve_workers(workers)
    if nw == 1:
        rows = [_trial(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=nw) as ex:
            rows = list(ex.map(_trial, jobs, chunksize=max(1, len(jobs) // (4 * nw))))
    rows.sort(key=lambda r: r["trial"])
    summary = summarize(rows, config.params.delta, time.perf_counter() - t0)
    out = out if out is not None else config.output
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / "trials.csv").write_text(trials_csv(rows))
        (d / "summary.json").write_text(json.dumps(
            {"config": config.to_dict(), "summary": summary.to_dict()}, sort_keys=True, indent=2) + "\n")
    return summary, rows


def recount_failures(csv_text: str) -> int:
    return sum(int(r["failed"]) for r in csv.DictReader(io.StringIO(csv_text)))


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def sweep_complexity(ratios: Sequence[float] = (4, 16, 64),
                     tails: Sequence[TailClass] = (Variance(), Moment(4.0), SubGaussian()),
                     delta: float = 0.1, lam_over_sigma: float = 16.0) -> List[dict]:
    """Sample budget of the main estimator per (sigma/eps, tail) cell, with sigma = 1.

    ``n_loc`` is the adaptive localizer's cost at delta/2 and ``n_ref`` the
    refinement cost at delta/2.
    """
    rows = []
    n_loc = adaptive_cost(lam_over_sigma, 1.0, delta / 2)
    for ratio in ratios:
        eps = 1.0 / ratio
        for tail in tails:
            n_ref = total_refinement_cost(eps, delta / 2, 1.0, tail)
            rows.append({"sigma_over_eps": float(ratio), "tail": _tail_label(tail),
                         "i_max": compute_i_max(tail, 1.0, eps), "n_loc": n_loc,
                         "n_ref": n_ref, "n_total": n_loc + n_ref})
    return rows


def _tail_label(tail: TailClass) -> str:
    return f"moment{tail.k:g}" if isinstance(tail, Moment) else tail.name


def imax_ordering_holds(rows: Sequence[dict]) -> bool:
    """Moment and sub-Gaussian cells never need more regions than the variance cell."""
    var = {r["sigma_over_eps"]: r["i_max"] for r in rows if r["tail"] == "variance"}
    return all(r["i_max"] <= var[r["sigma_over_eps"]] for r in rows
               if r["tail"] != "variance" and r["sigma_over_eps"] in var)


def rows_to_csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
    return buf.getvalue()


def csv_to_rows(text: str) -> List[dict]:
    out = []
    for r in csv.DictReader(io.StringIO(text)):
        row = {}
        for k, v in r.items():
            try:
                row[k] = int(v)
            except ValueError:
                try:
                    row[k] = float(v)
                except ValueError:
                    row[k] = v
        out.append(row)
    return out


def adaptive_budget(lam: float, sigma: float, eps: float, delta: float,
                    tail: TailClass = Variance()) -> int:
    """Samples the main estimator (adaptive localizer) spends; independent of the data."""
    return adaptive_cost(lam, sigma, delta / 2) + total_refinement_cost(eps, delta / 2, sigma, tail)


def _gap_trial(args) -> tuple:
    lam, sigma, eps, delta, budget, mode, seed, t = args
    s = derive_seed(seed, ("gap", budget, t))
    rng = substream(s, "instance")
    N = round(lam / sigma) - 1
    j = int(rng.integers(1, N + 1))
    sign = 1 if rng.random() < 0.5 else -1
    spec = make_hard_instance(j, sign, lam, sigma, eps)
    p = ProblemParams(lam, sigma, eps, delta)
    a = Agent(spec, substream(s, "adaptive"), budget=budget, mode=mode)
    try:
        ad_fail = abs(estimate_mean_main(a, p, seed=s).mu_hat - spec.mean()) > eps
    except BudgetExhausted:
        ad_fail = True
    b = Agent(spec, substream(s, "baseline"), budget=budget, mode=mode)
    try:
        na_fail = abs(nonadaptive_baseline(b, p, budget).mu_hat - spec.mean()) > eps
    except ParamError:
        na_fail = True  # fewer than one query per location
    return int(ad_fail), int(na_fail)


def gap_experiment(lam_over_sigma: float, eps: float, delta: float, budgets: Sequence[int],
                   trials: int = 300, seed: int = 0, mode: str = "aggregate",
                   workers: Optional[int] = None) -> List[dict]:
    """Paired failure rates of the main estimator and the non-adaptive baseline.

    Each trial draws j uniformly from the grid and a random sign; both
    learners face the same hard instance with the same budget. ``eps`` is
    in units of sigma (sigma = 1).
    """
    if not eps < 0.5:
        raise ParamError("the hard family needs eps < sigma/2")
    lam = float(lam_over_sigma)
    rows = []
    nw = resolve_workers(workers)
    for budget in budgets:
        jobs = [(lam, 1.0, eps, delta, int(budget), mode, seed, t) for t in range(trials)]
        if nw == 1:
            res = [_gap_trial(j) for j in jobs]
        else:
            with ProcessPoolExecutor(max_workers=nw) as ex:
                res = list(ex.map(_gap_trial, jobs, chunksize=max(1, trials // (4 * nw))))
        rows.append({"budget": int(budget),
                     "adaptive_fail": sum(r[0] for r in res) / trials,
                     "nonadaptive_fail": sum(r[1] for r in res) / trials,
                     "adaptive_failures": sum(r[0] for r in res),
                     "nonadaptive_failures": sum(r[1] for r in res),
                     "trials": trials})
    return rows


# ---------------------------------------------------------------------------
# Localizer only
# ---------------------------------------------------------------------------


def run_localize(config: ExperimentConfig, seed: Optional[int] = None) -> dict:
    seed = config.master_seed if seed is None else int(seed)
    p = config.params
    agent = Agent(config.distribution, substream(seed, ("agent", 0)), mode=config.mode)
    if config.localizer == "gray":
        gray_plan(p.lam, p.sigma, p.delta)
        ci = gray_localize(agent, p.lam, p.sigma, p.delta)
    else:
        ci = median_localize_adaptive(agent, p.lam, p.sigma, p.delta / 2)
    return {"method": ci.method, "center": ci.center, "half_width": ci.half_width,
            "lo": ci.lo, "hi": ci.hi, "claimed_coverage": ci.claimed_coverage,
            "samples": ci.samples, "bits": list(ci.bits)}
