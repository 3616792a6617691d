"""Bounds on the ATE and the subgroup LATEs for the binary reference design.

Uses the exact population distribution, so the only approximation left is
the sieve degree K. Run: python3 demos/replicate_simulation.py
"""

from mtebounds import EngineConfig, TargetSpec, bounds, paper_dgp, population_distribution, true_parameter

K = 50


def show(label, result, truth=None):
    extra = "" if truth is None else f"   truth {truth:.3f}"
    print(f"  {label:<34s} [{result.lower:7.3f}, {result.upper:7.3f}]{extra}")


def main():
    dgp = paper_dgp()
    pop = population_distribution(dgp)
    ate = TargetSpec("ATE")

    print(f"ATE (K={K})")
    runs = [("worst case", False, ()), ("worst case, W", True, ()), ("U0", False, ("U0",)),
            ("U0, W", True, ("U0",)), ("U*, W", True, ("Ustar",)), ("M + C, W", True, ("M", "C"))]
    for label, use_w, assume in runs:
        show(label, bounds(pop, ate, EngineConfig(K=K, use_w=use_w, assumptions=assume)),
             true_parameter(dgp, ate))

    # compliers are point identified: no defiers in a threshold model
    for x in (0, 1):
        print(f"\nLATEs given X={x}")
        late_c = TargetSpec("LATE_C", x=x)
        show("compliers", bounds(pop, late_c, EngineConfig(K=K, use_w=False)), true_parameter(dgp, late_c))
        for kind, name in (("LATE_AT", "always-takers"), ("LATE_NT", "never-takers")):
            spec = TargetSpec(kind, x=x)
            truth = true_parameter(dgp, spec)
            for label, use_w, assume in [("worst case", False, ()), ("worst case, W", True, ()),
                                         ("U0 + M + C, W", True, ("U0", "M", "C")),
                                         ("U*, W", True, ("Ustar",))]:
                show(f"{name}: {label}", bounds(pop, spec, EngineConfig(K=K, use_w=use_w, assumptions=assume)),
                     truth)


if __name__ == "__main__":
    main()
