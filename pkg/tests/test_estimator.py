import json

import numpy as np
import pytest

from onebit.agent import Agent, BudgetExhausted
from onebit.core import (Moment, ParamError, ProblemParams, SubGaussian, Variance, derive_seed,
                         substream)
from onebit.distributions import Gaussian, PointMass, TwoPoint, make_hard_instance
from onebit.estimator import (anytime_delta, estimate_anytime, estimate_mean_main, estimate_multivariate,
                              estimate_two_stage, estimate_unknown_variance, ladder_size, select_rung,
                              nonadaptive_baseline)
from onebit.localize import adaptive_cost, gray_plan
from onebit.schedule import total_refinement_cost

P = ProblemParams(16, 1, 0.25, 0.1)


def ag(spec, seed=0, mode="aggregate", **kw):
    return Agent(spec, substream(seed, "agent"), mode=mode, **kw)


def test_point_mass_always_within_eps():
    for t in range(100):
        rep = estimate_mean_main(ag(PointMass(0.37), t), P, seed=t)
        assert abs(rep.mu_hat - 0.37) <= 0.25


def test_point_mass_exact_mode():
    rep = estimate_mean_main(ag(PointMass(0.37), 1, mode="exact"), P, seed=1)
    assert abs(rep.mu_hat - 0.37) <= 0.25


def test_accounting_identities():
    a = ag(Gaussian(0.3, 1.0))
    rep = estimate_mean_main(a, P, seed=0)
    assert rep.samples_total == rep.samples_localization + rep.samples_refinement == a.samples_used
    assert rep.samples_localization == adaptive_cost(16, 1, 0.05)
    assert rep.samples_refinement == total_refinement_cost(0.25, 0.05, 1.0, Variance())
    assert rep.i_max == 7 and rep.half_width == 3.0 and rep.sigma_eff == 1.0
    assert len(rep.regions) == 14
    assert rep.rounds_of_adaptivity == 5 + 1


@pytest.mark.parametrize("tail, variant", [(Moment(4.0), "moment"), (SubGaussian(), "subgauss")])
def test_tail_variants(tail, variant):
    rep = estimate_mean_main(ag(Gaussian(0.3, 1.0)), ProblemParams(16, 1, 0.05, 0.1), tail, seed=2)
    assert rep.variant == variant
    assert rep.i_max == 5
    assert abs(rep.mu_hat - 0.3) <= 0.05


def test_report_is_deterministic_and_serializable():
    r1 = estimate_mean_main(ag(TwoPoint(-1, 1, 0.5), 4), P, seed=4)
    r2 = estimate_mean_main(ag(TwoPoint(-1, 1, 0.5), 4), P, seed=4)
    assert r1.to_json() == r2.to_json()
    d = json.loads(r1.to_json())
    assert {"mu_hat", "samples_localization", "samples_refinement", "samples_total", "regions",
            "rounds_of_adaptivity", "i_max", "sigma_eff"} <= set(d)
    r3 = estimate_mean_main(ag(TwoPoint(-1, 1, 0.5), 5), P, seed=5)
    assert r3.mu_hat != r1.mu_hat


def test_unknown_localizer_rejected():
    with pytest.raises(ParamError):
        estimate_mean_main(ag(PointMass(0)), P, localizer="magic")


def test_capped_agent_raises():
    with pytest.raises(BudgetExhausted):
        estimate_mean_main(ag(PointMass(0), budget=1000), P)


# -- two-stage ---------------------------------------------------------------


def test_two_stage_structure():
    a = ag(Gaussian(0.3, 1.0), 1)
    p = ProblemParams(64, 1, 0.25, 0.1)
    rep = estimate_two_stage(a, p, seed=1)
    assert rep.rounds_of_adaptivity == 2
    assert rep.samples_localization == 156 == gray_plan(64, 1, 0.1).samples
    kinds = a.transcript.kind_counts
    assert set(kinds) == {("localize", "gray"), ("refine", "interval")}
    assert kinds[("localize", "gray")] == 156
    assert rep.sigma_eff == pytest.approx(max(1.0, rep.half_width / 3))
    assert rep.samples_refinement == total_refinement_cost(0.25, 0.05, rep.sigma_eff, Variance())
    assert abs(rep.mu_hat - 0.3) <= 0.25


def test_two_stage_needs_wide_enough_prior():
    with pytest.raises(ParamError):
        estimate_two_stage(ag(PointMass(0)), ProblemParams(4, 1, 0.25, 0.1))


# -- anytime -----------------------------------------------------------------


def test_anytime_delta_weights():
    assert anytime_delta(1.0, 1) == pytest.approx(0.6079, abs=1e-4)
    assert anytime_delta(1.0, 2) == pytest.approx(0.1520, abs=1e-4)
    assert sum(anytime_delta(0.1, t) for t in range(1, 10**5)) <= 0.1


def test_anytime_single_round_budget():
    n_loc = adaptive_cost(16, 1, 0.05)
    n1 = total_refinement_cost(0.5, anytime_delta(0.05, 1), 1.0, Variance())
    a = ag(Gaussian(0.3, 1.0), budget=n_loc + n1)
    rep = estimate_anytime(a, 0.1, 16, 1, seed=0)
    assert rep.meta["T"] == 1 and rep.meta["eps_T"] == 0.5
    assert a.samples_used == n_loc + n1


def test_anytime_no_completed_round():
    n_loc = adaptive_cost(16, 1, 0.05)
    a = ag(Gaussian(0.3, 1.0), budget=n_loc + 10)
    rep = estimate_anytime(a, 0.1, 16, 1)
    assert rep.meta["T"] == 0 and rep.meta["eps_T"] == 3.0 and rep.mu_hat == rep.center
    assert a.samples_used <= a.budget


def test_anytime_budget_checks():
    with pytest.raises(ParamError, match="insufficient budget for localization"):
        estimate_anytime(ag(PointMass(0), budget=100), 0.1, 16, 1)
    with pytest.raises(ParamError):
        estimate_anytime(ag(PointMass(0)), 0.1, 16, 1)


@pytest.mark.parametrize("budget", [10**7, 10**8, 10**9])
def test_anytime_never_exceeds_budget(budget):
    a = ag(Gaussian(0.3, 1.0), budget=budget)
    rep = estimate_anytime(a, 0.1, 16, 1)
    assert a.samples_used <= budget
    assert rep.meta["T"] >= 1
    assert abs(rep.mu_hat - 0.3) <= rep.meta["eps_T"]


# -- unknown variance ----------------------------------------------------------


def test_ladder_size():
    assert ladder_size(0.5, 8) == 4
    assert ladder_size(1, 1) == 0
    assert ladder_size(1, 3) == 2


def test_unknown_variance_ladder_shape():
    rep = estimate_unknown_variance(ag(Gaussian(0.3, 1.0)), 0.5, 0.1, 16, 0.5, 8, seed=3)
    lad = rep.meta["ladder"]
    assert lad["T"] == 4 and lad["sigmas"] == [0.5, 1, 2, 4, 8]
    assert lad["half_widths"] == pytest.approx([0.05, 0.1, 0.2, 0.4, 0.8])
    assert lad["feasible"][-1]
    assert abs(rep.mu_hat - 0.3) <= 0.5


def test_unknown_variance_nested_intervals_pick_bottom():
    rep = estimate_unknown_variance(ag(PointMass(1.3)), 0.5, 0.1, 16, 0.5, 8)
    assert rep.meta["i_star"] == 0
    assert abs(rep.mu_hat - 1.3) <= 0.05


def test_unknown_variance_top_down_flag():
    top = estimate_unknown_variance(ag(PointMass(1.3), 1), 0.5, 0.1, 16, 0.5, 8, seed=1, top_down=True)
    assert top.meta["i_star"] == 0 and top.meta["top_down"]
    assert abs(top.mu_hat - 1.3) <= 0.05


@pytest.mark.parametrize("mu, bottom, top", [
    ([0.0, 0.0, 0.0, 0.0], 0, 0),        # nested: everything feasible
    ([5.0, 0.0, 0.0, 0.0], 1, 1),        # bottom rung off
    ([0.0, 5.0, 0.0, 0.0], 2, 2),        # a bad middle rung rules out everything below it
    ([0.95, 0.95, 1.3, 0.0], 1, 3),      # top-down stops at rung 2 although rung 1 is feasible
    ([0.0, 0.0, 0.0, 9.0], 3, 3),        # only the top rung is feasible
])
def test_rung_selection(mu, bottom, top):
    widths = [0.1, 0.2, 0.4, 0.8]
    calls = []

    def run(i):
        calls.append(i)
        return mu[i]

    assert select_rung(run, widths)[0] == bottom
    assert calls == [0, 1, 2, 3]
    calls.clear()
    i_star, est, feas = select_rung(run, widths, top_down=True)
    assert i_star == top
    # the walk stops right after the first infeasible rung
    assert calls == list(range(3, max(top - 1, 0) - 1, -1))
    assert feas[3]


@pytest.mark.parametrize("args", [(0.5, 0.1, 16, 2, 1), (0.5, 0.1, 16, 0, 1), (1.5, 0.1, 16, 1, 2),
                                  (0.5, 0.1, 4, 1, 8)])
def test_unknown_variance_bad_ladder(args):
    with pytest.raises(ParamError):
        estimate_unknown_variance(ag(PointMass(0)), *args)


# -- multivariate ------------------------------------------------------------


def test_multivariate_d1_reduces_to_univariate():
    spec = Gaussian(0.3, 1.0)
    mv = estimate_multivariate([ag(spec, 7)], 0.25, 0.1, 16, 1, seed=7)
    uni = estimate_mean_main(ag(spec, 7), P, seed=derive_seed(7, ("coord", 0)))
    assert mv.mu_hat[0] == uni.mu_hat
    assert mv.samples_total == uni.samples_total


def test_multivariate_d4_targets():
    mv = estimate_multivariate([ag(PointMass(float(c)), c) for c in range(4)], 0.5, 0.2, 16, 1)
    for rep in mv.coordinates:
        assert rep.meta["params"]["eps"] == pytest.approx(0.25)
        assert rep.meta["params"]["delta"] == pytest.approx(0.05)


def test_multivariate_point_masses():
    for t in range(5):
        mv = estimate_multivariate([ag(PointMass(-2.2), t), ag(PointMass(5.1), t + 100)], 0.25, 0.1, 16, 1,
                                   seed=t)
        assert np.linalg.norm(mv.mu_hat - np.array([-2.2, 5.1])) <= 0.25
    assert json.loads(mv.to_json())["variant"] == "multivariate"


def test_multivariate_needs_a_coordinate():
    with pytest.raises(ParamError):
        estimate_multivariate([], 0.25, 0.1, 16, 1)


# -- non-adaptive baseline ---------------------------------------------------


def test_baseline_noiseless_recovers_grid_point():
    p = ProblemParams(16, 1, 0.25, 0.1)
    for j in (1, 7, 15):
        c = -16 + 2 * j
        rep = nonadaptive_baseline(ag(PointMass(float(c)), mode="exact"), p, 3000)
        assert rep.meta["j_hat"] == j and rep.center == c


def test_baseline_on_hard_instance_and_accounting():
    p = ProblemParams(16, 1, 0.25, 0.1)
    spec = make_hard_instance(4, -1, 16, 1, 0.25)
    a = ag(spec, mode="exact")
    rep = nonadaptive_baseline(a, p, 100_001)
    assert a.samples_used == rep.samples_total <= 100_001
    assert rep.samples_total == 2 * 15 * (100_001 // 30)
    assert rep.mu_hat == pytest.approx(spec.mean())


def test_baseline_rejects_tiny_budget():
    with pytest.raises(ParamError, match="budget below one query per location"):
        nonadaptive_baseline(ag(PointMass(0)), P, 29)
