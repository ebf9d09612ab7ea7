"""Efficiency of the Otto cycle with a coupled hot bath, numerical and closed form."""

import numpy as np

from omotto import CycleConfig, run_cycle

header = ["lambda", "tau", "eta_th", "eta_num", "eta_sta", "eta_sta'", "sum dE"]
print(" ".join(f"{h:>8}" for h in header))
for tau in (0.1, 0.5):
    for lam in np.linspace(0, 0.5, 6):
        r = run_cycle(CycleConfig.reference(lam, tau))
        print(f"{lam:7.2f} {tau:6.2f} {r.eta_th:8.4f} {r.eta_num:8.4f} {r.eta_sta:8.4f} "
              f"{r.eta_sta_prime:8.4f} {r.extra_heat_total:8.3f}")
print("Otto bound:", run_cycle(CycleConfig.reference(0.2, 0.1), numerical=False).eta_otto)
