"""Testing assumptions by feasibility.

An assumption whose linear program has no solution is rejected by the data.
For the uniformity family the sign pattern is unknown a priori; every
pattern is tried and only the consistent ones are kept.
"""

from mtebounds import (AssumptionSpec, EngineConfig, TargetSpec, bounds, estimate_distribution, paper_dgp,
                       population_distribution, sample)
from mtebounds.engine import refute

pop = population_distribution(paper_dgp())
cfg = EngineConfig(K=20, use_w=True)

for spec in [AssumptionSpec("U", (1, 1)), AssumptionSpec("U", (-1, -1)), AssumptionSpec("U", (1, -1))]:
    res = refute(pop, [spec], cfg)
    print(f"U with signs {spec.direction}: {'refuted' if res.refuted else 'consistent'}")

for kind in ("U0", "Ustar"):
    res = refute(pop, [AssumptionSpec(kind)], cfg)
    print(f"{kind}: {res.probed} sign patterns probed, feasible {res.feasible_directions}")

# responses rise with u here, so positive selection on levels is rejected
r = bounds(pop, TargetSpec("ATE"), cfg.with_(assumptions=("MTS",)))
print("MTS:", "refuted" if r.refuted else f"[{r.lower:.3f}, {r.upper:.3f}]")

# a finite sample violates the exact data equalities; slack restores feasibility
noisy = estimate_distribution(sample(paper_dgp(), 2000, seed=1))
for eta in (0.0, 0.02, 0.05):
    r = bounds(noisy, TargetSpec("ATE"), cfg.with_(eta=eta))
    print(f"n=2000, eta={eta}:", "infeasible" if r.refuted else f"[{r.lower:.3f}, {r.upper:.3f}]")
