"""How the bounds grow with the sieve degree, and where they level off.

Bounds are nested in K because a degree-K Bernstein polynomial is also a
degree-(K+1) one. Widths grow quickly at first and then flatten; a K past
the bend is a conservative choice.
"""

from mtebounds import EngineConfig, TargetSpec, paper_dgp, population_distribution
from mtebounds.engine import k_sweep, results_to_csv

pop = population_distribution(paper_dgp())
results = k_sweep(pop, TargetSpec("ATE"), EngineConfig(use_w=True), [1, 2, 3, 5, 10, 20, 30, 40, 50])

print(f"{'K':>4s} {'lower':>8s} {'upper':>8s} {'width':>8s}")
prev = None
for r in results:
    step = "" if prev is None else f"   +{r.width - prev:.4f}"
    print(f"{r.K:4d} {r.lower:8.4f} {r.upper:8.4f} {r.width:8.4f}{step}")
    prev = r.width

# the same table as CSV, e.g. for plotting
print()
print(results_to_csv(results), end="")
