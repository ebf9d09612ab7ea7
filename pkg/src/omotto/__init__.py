"""Optomechanical quantum Otto engine with a parametrically driven mechanical mode.

Gaussian (positive-P moment) dynamics of the cavity working substance,
steady states and heat fluxes of the hot isochoric stroke, detuning ramps
with counter-diabatic driving, two-point-measurement work statistics and the
assembled Otto cycle.
"""

__version__ = "0.1.0"

from .errors import (ConvergenceError, DivergenceError, NumericError, OttoError, RefrigeratorError,
                     RootNotFoundError, StabilityError, TrapInversionError, UsageError,
                     ValidationError)
from .model import (SystemParams, cooperativity, diffusion_matrix, drift_eigenvalues, drift_matrix,
                    is_stable, make_params, reference_params, stability_bound)
from .steady import (SteadyCorrelations, analytic_correlations, effective_hot_occupation,
                     hot_steady, lyapunov_steady, solve_lyapunov)
from .flux import FluxLedger, flux_ledger, utilization_efficiency
from .protocol import (DetuningProtocol, adiabatic_parameter, cd_coefficient, minimal_duration,
                       modified_frequency, ramp_detuning, sta_energy, sta_energy_average)
from .dynamics import (GaussianState, StrokeTrace, cavity_energy, extra_heat, propagate_moments,
                       run_stroke, stroke_initial_state)
from .sde import EnsembleConfig, EnsembleStats, noise_factor, simulate_ensemble
from .thermo import (CycleConfig, CycleReport, char_function, eta_otto, eta_sta, eta_sta_prime,
                     eta_th, eta_th_prime, find_tau_cri, find_tau_min, mean_work_heat, run_cycle)
