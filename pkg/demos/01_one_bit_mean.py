# coding: utf-8

# # Estimating a mean from yes/no answers
#
# An agent holds samples from an unknown distribution. We never see a sample.
# We may only ask "is your next sample inside [a, b]?" and get back one bit.
# This walk-through runs the main estimator on a Gaussian and looks at where
# the samples go.

import numpy as np

from onebit import Agent, Gaussian, ProblemParams, estimate_mean_main, substream

# In[1]:

# The prior says |mean| <= 16 and the standard deviation is at most 1.
# We want the mean to within 0.25 with probability at least 0.9.
params = ProblemParams(lam=16, sigma=1, eps=0.25, delta=0.1)
truth = Gaussian(0.3, 1.0)

# "aggregate" draws each batch of identical queries as one binomial count,
# which has the same distribution as answering them one by one.
agent = Agent(truth, substream(0, "agent"), mode="aggregate")
rep = estimate_mean_main(agent, params, seed=0)
print("estimate", rep.mu_hat, "error", abs(rep.mu_hat - truth.mean()))

# In[2]:

# Localization is cheap; refinement is where the budget goes.
print("localization samples", rep.samples_localization)
print("refinement samples  ", rep.samples_refinement)
print("rounds of adaptivity", rep.rounds_of_adaptivity)

# In[3]:

# Each region around the localized centre contributes its own piece of the mean.
for row in rep.regions:
    print(f"{row['i']:>3}  [{row['a']:8.2f}, {row['b']:8.2f})  n={row['n_i']:>8}  mu_i={row['mu_hat_i']:+.4f}")

# In[4]:

# A few repetitions with different seeds. The errors stay well inside 0.25.
errs = []
for s in range(20):
    a = Agent(truth, substream(s, "agent"), mode="aggregate")
    errs.append(abs(estimate_mean_main(a, params, seed=s).mu_hat - truth.mean()))
print("max error over 20 runs", np.max(errs))
