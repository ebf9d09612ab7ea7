"""Stochastic trajectories compared with the deterministic moment equations."""

import numpy as np

from omotto import DetuningProtocol, EnsembleConfig, reference_params, simulate_ensemble
from omotto.sde import moment_reference

p = reference_params(0.2)
cases = [EnsembleConfig(p, "compression", DetuningProtocol.compression(10, 20, 0.1), seed=1),
         EnsembleConfig(p, "expansion", DetuningProtocol.expansion(20, 10, 0.1), seed=2),
         EnsembleConfig(p, "hot-isochoric", span=1.0, seed=3)]
for cfg in cases:
    st = simulate_ensemble(cfg, jobs=2)
    ref = moment_reference(cfg)
    ode = np.interp(st.times, ref.times, ref.energy)
    print(f"{cfg.stroke}: (n_traj={st.n_traj})")
    for t, e, se, r in zip(st.times, st.energy, st.energy_se, ode):
        print(f"  t={t:7.4f}  E_sde={e:10.4f} +- {se:7.4f}  E_ode={r:10.4f}  z={(e - r) / se:+.2f}")
