"""Heat-flux bookkeeping of the hot isochoric configuration."""

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, UsageError


@dataclass(frozen=True)
class FluxLedger:
    """Instantaneous heat fluxes, in units of kappa * omega_M.

    ``q_b_to_a`` follows the sign of i omega_M G (<a^dag b> - <a b^dag>): it
    is negative when energy flows from the mechanics into the cavity. The
    cavity therefore gains ``-q_b_to_a`` and the mechanics gains
    ``q_a_to_b`` (numerically equal to ``q_b_to_a`` on resonance).
    """

    q_b_to_a: float
    q_pd: float
    q_up_a: float
    q_down_a: float
    q_up_b: float
    q_down_b: float
    q_a_to_b: float

    def cavity_balance(self):
        """d<H_a>/dt; zero in a steady state."""
        return -self.q_b_to_a + self.q_up_a + self.q_down_a

    def mechanical_balance(self):
        """d<H_b>/dt; zero in a steady state."""
        return self.q_a_to_b + self.q_pd + self.q_up_b + self.q_down_b


def _correlations(state):
    """(<a^dag a>, <b^dag b>, <a^dag b>, <b^2>) from a state object."""
    if all(hasattr(state, f) for f in ("n_a", "n_b", "ab_cross", "b_squared")):
        return state.n_a, state.n_b, state.ab_cross, state.b_squared
    S = getattr(state, "moments", None)
    if S is None:
        raise UsageError("state lacks the correlations needed for the flux ledger")
    S = np.asarray(S)
    return S[0, 1].real, S[2, 3].real, S[1, 2], S[2, 2]


def flux_ledger(state, p, cavity_bath_occupation=None):
    """Heat-flux ledger of a steady or propagated Gaussian state.

    Cavity energies are weighted by omega_M, i.e. the resonant hot frame
    Delta = omega_M is assumed. ``cavity_bath_occupation`` defaults to
    ``p.n_c``.
    """
    na, nb, adag_b, b2 = _correlations(state)
    wm = p.omega_m
    occ = p.n_c if cavity_bath_occupation is None else cavity_bath_occupation
    # <a b^dag> = conj(<a^dag b>)
    exchange = -2.0 * p.G * complex(adag_b).imag
    return FluxLedger(
        q_b_to_a=float(wm * exchange),
        q_pd=float(wm * p.lam * 2.0 * complex(b2).real),
        q_up_a=float(wm * p.kappa * occ * (na + 1)),
        q_down_a=float(-wm * p.kappa * (occ + 1) * na),
        q_up_b=float(wm * p.gamma * p.n_bar * (nb + 1)),
        q_down_b=float(-wm * p.gamma * (p.n_bar + 1) * nb),
        q_a_to_b=float(wm * exchange),
    )


def utilization_efficiency(ledger):
    """Fraction of the energy injected into the mechanics that reaches the cavity."""
    den = ledger.q_pd + ledger.q_up_b
    if den <= 0:
        raise NumericError("utilization efficiency undefined: no energy injected into the mechanics")
    return -ledger.q_b_to_a / den
