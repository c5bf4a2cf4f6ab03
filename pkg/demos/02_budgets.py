# coding: utf-8

# # How the sample budget grows with accuracy
#
# Nothing here touches data: the budget of the refinement stage is a pure
# function of (sigma/eps, delta, tail class), so we can tabulate it directly.

from onebit import Moment, SubGaussian, Variance, compute_i_max, make_schedule
from onebit.harness import SWEEP_COLUMNS, rows_to_csv, sweep_complexity

# In[1]:

# The per-region table at sigma/eps = 4. Inner regions get the most samples.
sched = make_schedule(center=0.0, sigma=1.0, eps=0.25, delta=0.1, tail=Variance())
print(sched.to_csv())

# In[2]:

# Stronger tail assumptions cut the number of regions. They do not cut the
# cost: the last region is enormous, its accuracy target shrinks with its
# width, and the linear term of the Bernstein sample size takes over.
for ratio in (4, 16, 100):
    print(ratio, [compute_i_max(t, 1.0, 1.0 / ratio) for t in (Variance(), Moment(4.0), SubGaussian())])

# In[3]:

# The full sweep, as CSV.
print(rows_to_csv(sweep_complexity(ratios=(4, 16, 64, 256)), SWEEP_COLUMNS))
