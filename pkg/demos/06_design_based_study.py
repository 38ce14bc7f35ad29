"""Design-based simulation on a synthetic income population.

No model generates the data here: fixed finite populations (with negative
incomes, handled via the shifted transform) are repeatedly sampled without
replacement, and both estimators are scored against the fixed true means.
"""

import numpy as np

from groupedsae import (
    EmConfig, Thresholds, default_shift, simulate_design_based, synthetic_population,
)

values, covariates = synthetic_population(n_domains=20, units_per_domain=500, seed=77)
allv = np.concatenate(list(values.values()))
shift = default_shift(allv)
print(f"{len(values)} domains, {allv.size} units, "
      f"income range [{allv.min():.2f}, {allv.max():.2f}]")
print(f"negative incomes present; transform shift C = {shift:.3f}\n")

thresholds = Thresholds(np.array([3.0, 5.0, 7.0, 10.0]))
config = EmConfig(s0=60, s1=800, s2=80, window_h=3, window_d=1,
                  max_em_iter=6, seed=0, threads=2)
records = simulate_design_based(
    values, covariates, thresholds, shift=shift, n_per_domain=20, R=15,
    seed=7, em_config=config, s3=150, burnin=30, threads=2,
)

print("domain   n   RRMSE (EB)  RRMSE (naive)")
for rec in records:
    print(f"{rec['domain_id']:6s} {rec['n']:4d} {rec['rrmse_eb']:10.4f} {rec['rrmse_naive']:13.4f}")
wins = sum(r["rrmse_eb"] < r["rrmse_naive"] for r in records)
print(f"\nEB beats naive in {wins}/{len(records)} domains "
      "even though the model did not generate this population")
