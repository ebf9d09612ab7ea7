"""Hot-bath steady state and energy-flux bookkeeping across the coupling range."""

import numpy as np

from omotto import (analytic_correlations, flux_ledger, hot_steady, reference_params,
                    stability_bound, utilization_efficiency)

p0 = reference_params()
lmax = stability_bound(p0)
print(f"stability bound lambda_max = {lmax:.4f}")
print(f"{'lambda':>8} {'n_h':>10} {'xi':>8} {'cavity bal':>11} {'mech bal':>11}")
for lam in np.linspace(0, 0.95 * lmax, 8):
    p = p0.replace(lam=lam)
    corr = analytic_correlations(p)
    led = flux_ledger(hot_steady(p), p)
    print(f"{lam:8.3f} {corr.n_a:10.4f} {utilization_efficiency(led):8.4f} "
          f"{led.cavity_balance():11.2e} {led.mechanical_balance():11.2e}")
