"""Exact visit-count laws for a two-state Markov chain.

Three independent computations of the same object are compared:
  * a transfer-operator dynamic program (fast, scales to N ~ thousands),
  * brute-force enumeration of every path (slow, small N only),
  * the hybrid-law telescoping identity, whose residual must vanish.
"""
import numpy as np

from poissonvisits import (
    MarkovBinaryModel,
    enumerate_count_distribution,
    exact_count_distribution,
    poisson_pmf,
    telescoping_residual_max,
    tv_distance,
)

model = MarkovBinaryModel(P=np.array([[0.9, 0.1], [0.8, 0.2]]), hit={1})
print(f"stationary hit probability eps = {model.eps:.6f}")

N = 12
dp = exact_count_distribution(model, N)
en = enumerate_count_distribution(model, N)
print(f"N={N}: DP vs enumeration, max gap = "
      f"{np.max(np.abs(dp.probs - en.probs)):.3e}")

for N in (32, 128, 512):
    law = exact_count_distribution(model, N)
    tv = tv_distance(law, poisson_pmf(N * model.eps))
    res = telescoping_residual_max(model, min(N, 128))
    print(f"N={N:>4}: TV to Poisson({N * model.eps:.3f}) = {tv:.5f}, "
          f"telescoping residual <= {res:.2e}")
