"""Compare the parallel and serial vacancy recursions against Monte Carlo.

Starting from a thermal lattice, the number filter leaves each site empty
with probability eps0 = p(0).  Repeated merging then drives the vacancy
down: quadratically per step in parallel mode, linearly in serial mode.
A direct Monte Carlo simulation of the three-well protocol confirms the
closed forms.
"""

from mottprep import (
    ThermalParams,
    defect_probability,
    filter_sweep,
    monte_carlo_triples,
    occupation_distribution,
    vacancy_recursion,
)

params = ThermalParams(mu_U=0.5, T_U=0.1)
dist = occupation_distribution(params)
filtered = filter_sweep(dist)
eps0 = float(filtered.p[0])

print(f"Thermal state at mu = {params.mu_U} U, T = {params.T_U} U:")
print(f"  initial defect probability : {defect_probability(dist):.4e}")
print(f"  vacancy after filtering    : {eps0:.4e}")
print()

steps = 4
parallel = vacancy_recursion(eps0, steps, "parallel")
serial = vacancy_recursion(eps0, steps, "serial")
print("iteration   parallel eps    serial eps")
for i, (p, s) in enumerate(zip(parallel, serial), start=1):
    print(f"    {i}       {p:.4e}     {s:.4e}")
print()

mc = monte_carlo_triples(0.1, n_samples=1_000_000, seed=7)
print("Monte Carlo check at eps0 = 0.1 (one parallel merge, 1e6 samples):")
print(f"  analytic  : {mc.analytic_vacancy:.6f}")
print(f"  empirical : {mc.empirical_vacancy:.6f} +- {mc.stderr:.6f}")
print(f"  deviation : {abs(mc.empirical_vacancy - mc.analytic_vacancy) / mc.stderr:.2f} sigma")
