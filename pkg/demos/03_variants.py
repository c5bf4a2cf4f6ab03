# coding: utf-8

# # Beyond the main estimator
#
# Each cell below changes one assumption of the basic setting.

from onebit import (Agent, Gaussian, ProblemParams, estimate_anytime, estimate_two_stage,
                    estimate_unknown_variance, make_hard_instance, nonadaptive_baseline, substream)
from onebit.harness import adaptive_budget, gap_experiment

truth = Gaussian(0.3, 1.0)

# In[1]:

# Two rounds of interaction only: Gray-code bits locate the mean without adapting.
a = Agent(truth, substream(1, "agent"), mode="aggregate")
rep = estimate_two_stage(a, ProblemParams(64, 1, 0.25, 0.1), seed=1)
print("two-stage", rep.mu_hat, "localization samples", rep.samples_localization)

# In[2]:

# When the budget is fixed in advance, halve the target until the money runs out.
for budget in (10**7, 10**8, 10**9):
    a = Agent(truth, substream(2, "agent"), budget=budget, mode="aggregate")
    rep = estimate_anytime(a, 0.1, 16, 1, seed=2)
    print(budget, "reached eps", rep.meta["eps_T"], "used", a.samples_used)

# In[3]:

# Scale known only to lie in [0.5, 8]: run a ladder of guesses and keep the
# finest one consistent with all coarser ones.
a = Agent(truth, substream(3, "agent"), mode="aggregate")
rep = estimate_unknown_variance(a, r=0.5, delta=0.1, lam=16, sigma_min=0.5, sigma_max=8, seed=3)
print("chosen rung", rep.meta["i_star"], "estimate", rep.mu_hat)

# In[4]:

# The non-adaptive baseline on a hard two-point instance.
spec = make_hard_instance(40, -1, 128, 1, 0.25)
b = Agent(spec, substream(4, "agent"), mode="aggregate")
print("baseline", nonadaptive_baseline(b, ProblemParams(128, 1, 0.25, 0.1), 3000).mu_hat, "truth", spec.mean())

# In[5]:

# Paired failure rates at a few budgets. The adaptive estimator has a fixed
# schedule, so below its own cost it simply cannot finish.
print("adaptive cost", adaptive_budget(128, 1, 0.25, 0.1))
for row in gap_experiment(128, 0.25, 0.1, [300, 3000, 30000], trials=50, seed=0):
    print(row["budget"], row["adaptive_fail"], row["nonadaptive_fail"])
