"""Adiabaticity of the detuning strokes and the cost of the counterdiabatic shortcut."""

import numpy as np

from omotto import DetuningProtocol, adiabatic_parameter, find_tau_min, sta_energy_average

tmin = find_tau_min(10, 20)
print(f"shortest stroke with a real modified frequency: tau_min = {tmin:.6f}")
print(f"{'tau':>8} {'Q*':>10} {'<H_STA>':>12}")
for tau in [1e-4, 0.01, tmin * 1.01, 0.1, 0.5, 2.0, 10.0]:
    prot = DetuningProtocol.compression(10, 20, tau)
    q = adiabatic_parameter(prot)
    cost = sta_energy_average(prot, 5.1) if tau > tmin else np.nan
    print(f"{tau:8.4f} {q:10.6f} {cost:12.4e}")
