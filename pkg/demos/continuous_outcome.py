"""Bounds for an outcome on [0, 1] with a trivariate Bernstein CDF sieve.

First a check: a binary outcome fed to the continuous engine gives the same
ATE bounds as the discrete engine. Then a Beta outcome whose law shifts with
treatment and with the selection unobservable.
"""

import numpy as np

from mtebounds import (ContinuousConfig, ContinuousSample, EngineConfig, TargetSpec, bounds,
                       bounds_continuous, paper_dgp, population_distribution)
from mtebounds.continuous import sample_from_distribution

ate = TargetSpec("ATE")
pop = population_distribution(paper_dgp())
cont = bounds_continuous(sample_from_distribution(pop), ate, ContinuousConfig(K_y=1, K_u=30, use_w=False))
disc = bounds(pop, ate, EngineConfig(K=30, use_w=False))
print(f"binary outcome, continuous engine [{cont.lower:.4f}, {cont.upper:.4f}]")
print(f"binary outcome, discrete engine   [{disc.lower:.4f}, {disc.upper:.4f}]")

rng = np.random.default_rng(11)
n = 3000
z = rng.integers(0, 2, n)
u = rng.random(n)
d = (u <= np.array([0.3, 0.7])[z]).astype(int)
y = rng.beta(2 + 2 * d, 2 + 2 * u)
s = ContinuousSample.from_arrays(y, d, z)
# true ATE: E[Beta(a, b)] = a / (a + b) integrated over u in closed form
truth = 2 * np.log(8 / 6) - np.log(6 / 4)
print(f"\nBeta outcome, true ATE {truth:.4f}")
for eta in (0.0, 0.05, 0.1):
    r = bounds_continuous(s, ate, ContinuousConfig(K=5, eta=eta))
    print(f"  eta={eta}:", "infeasible" if r.refuted else f"[{r.lower:.4f}, {r.upper:.4f}]")
