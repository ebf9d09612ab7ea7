"""Stroke durations below which the shortcut no longer pays off."""

import numpy as np

from omotto import CycleConfig, find_tau_cri, find_tau_min
from omotto.thermo import map_cycles

print(f"tau_min = {find_tau_min(10, 20):.6f}")
lams = np.linspace(0, 0.5, 6)
cycles = [CycleConfig.reference(lam) for lam in lams]
cri = map_cycles(find_tau_cri, cycles, jobs=4)
cri_p = map_cycles(lambda c: find_tau_cri(c, with_om=True), cycles, jobs=4)
for lam, a, b in zip(lams, cri, cri_p):
    print(f"lambda={lam:.2f}  tau_cri={a:.6f}  tau'_cri={b:.6f}")
