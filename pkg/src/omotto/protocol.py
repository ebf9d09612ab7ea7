"""Detuning ramps, counter-diabatic schedule and the Husimi adiabatic parameter.

A stroke is described by a :class:`DetuningProtocol`. Compression strokes
follow the ramp forward in time; expansion strokes run the ramp backwards,
i.e. ``Delta(t)`` of an expansion from ``delta_i`` to ``delta_f`` equals the
compression ramp from ``delta_f`` to ``delta_i`` evaluated at ``tau - t``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.optimize import minimize_scalar

from .errors import NumericError, TrapInversionError, ValidationError

COMPRESSION = "compression"
EXPANSION = "expansion"


def _quintic(s):
    return s**3 * (10 - 15 * s + 6 * s**2)


def _quintic_d1(s):
    return 30 * s**2 * (1 - s) ** 2


def _quintic_d2(s):
    return 60 * s * (1 - s) * (1 - 2 * s)


# name -> (profile, first derivative, second derivative), all on s in [0, 1]
RAMPS = {"quintic": (_quintic, _quintic_d1, _quintic_d2)}


def register_ramp(name, profile, d1, d2):
    """Add a ramp family. ``profile`` must map 0 -> 0 and 1 -> 1."""
    RAMPS[name] = (profile, d1, d2)


@dataclass(frozen=True)
class DetuningProtocol:
    delta_i: float
    delta_f: float
    tau: float
    direction: str = COMPRESSION
    sta: bool = False
    ramp: str = "quintic"

    def __post_init__(self):
        if not (self.delta_i > 0 and self.delta_f > 0):
            raise ValidationError("endpoint detunings must be positive")
        if not self.tau > 0:
            raise ValidationError("tau must be positive")
        if self.direction not in (COMPRESSION, EXPANSION):
            raise ValidationError(f"unknown stroke direction {self.direction!r}")
        if self.ramp not in RAMPS:
            raise ValidationError(f"unknown ramp family {self.ramp!r}")

    @classmethod
    def compression(cls, delta_l, delta_h, tau, **kw):
        return cls(delta_l, delta_h, tau, COMPRESSION, **kw)

    @classmethod
    def expansion(cls, delta_h, delta_l, tau, **kw):
        return cls(delta_h, delta_l, tau, EXPANSION, **kw)

    def with_tau(self, tau):
        return DetuningProtocol(self.delta_i, self.delta_f, tau, self.direction, self.sta, self.ramp)


def _check_time(prot, t):
    t = np.asarray(t, dtype=float)
    slack = 1e-12 * prot.tau
    if np.any(t < -slack) or np.any(t > prot.tau + slack):
        raise ValidationError(f"time outside [0, tau={prot.tau}]")
    return np.clip(t, 0.0, prot.tau)


def _evaluate(prot, t):
    """Return (Delta, dDelta/dt, d2Delta/dt2) at times ``t``."""
    t = _check_time(prot, t)
    f, f1, f2 = RAMPS[prot.ramp]
    s = t / prot.tau
    tau = prot.tau
    if prot.direction == COMPRESSION:
        d = prot.delta_f - prot.delta_i
        return prot.delta_i + d * f(s), d * f1(s) / tau, d * f2(s) / tau**2
    d = prot.delta_i - prot.delta_f
    r = 1.0 - s
    return prot.delta_f + d * f(r), -d * f1(r) / tau, d * f2(r) / tau**2


def ramp_detuning(prot, t):
    return _evaluate(prot, t)[0]


def ramp_derivatives(prot, t):
    _, d1, d2 = _evaluate(prot, t)
    return d1, d2


def cd_coefficient(prot, t):
    """Coefficient g of ``i g (a^2 - a^dag^2)`` in the counter-diabatic Hamiltonian."""
    delta, d1, _ = _evaluate(prot, t)
    return d1 / (4 * delta)


def modified_frequency(prot, t):
    delta, d1, _ = _evaluate(prot, t)
    x = 1.0 - d1**2 / (4 * delta**4)
    bad = np.atleast_1d(x <= 0)
    if bad.any():
        times = np.broadcast_to(np.asarray(t, dtype=float), np.shape(x))
        t_bad = float(np.atleast_1d(times)[np.argmax(bad)])
        raise TrapInversionError(f"trap inversion at t={t_bad:.6g}", t=t_bad)
    return delta * np.sqrt(x)


def sta_energy(prot, t, e0):
    """Instantaneous expectation value of the counter-diabatic Hamiltonian."""
    delta = ramp_detuning(prot, t)
    omega = modified_frequency(prot, t)
    return delta / prot.delta_i * e0 * (delta / omega - 1.0)


def minimal_duration(delta_i, delta_f, ramp="quintic"):
    """Shortest stroke time for which the modified frequency stays real.

    Uses a 1001-point scan of |dDelta/ds| / (2 Delta(s)^2) followed by a
    bounded Brent refinement around the best grid point.
    """
    if delta_i == delta_f:
        return 0.0
    f, f1, _ = RAMPS[ramp]
    d = delta_f - delta_i

    def ratio(s):
        return abs(d) * f1(s) / (2 * (delta_i + d * f(s)) ** 2)

    s = np.linspace(0.0, 1.0, 1001)
    k = int(np.argmax(ratio(s)))
    lo, hi = s[max(k - 1, 0)], s[min(k + 1, 1000)]
    res = minimize_scalar(lambda x: -ratio(x), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-13})
    return float(max(-res.fun, ratio(s[k])))


def sta_energy_average(prot, e0, rtol=1e-8, min_nodes=1001, max_nodes=2**21 + 1):
    """Time average of ``sta_energy`` over the stroke.

    Composite Simpson rule; the node count doubles until successive values
    agree to ``rtol``.
    """
    tmin = minimal_duration(prot.delta_i, prot.delta_f, prot.ramp)
    if prot.tau <= tmin:
        # locate the first offending instant for the error report
        t = np.linspace(0.0, prot.tau, 4001)
        delta, d1, _ = _evaluate(prot, t)
        k = int(np.argmin(1.0 - d1**2 / (4 * delta**4)))
        raise TrapInversionError(f"trap inversion: tau={prot.tau:.6g} <= tau_min={tmin:.6g}", t=float(t[k]))
    if e0 == 0:
        return 0.0
    n = min_nodes
    prev = None
    while n <= max_nodes:
        t = np.linspace(0.0, prot.tau, n)
        val = simpson(sta_energy(prot, t, e0), x=t) / prot.tau
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return float(val)
        prev = val
        n = 2 * n - 1
    raise NumericError(f"STA energy quadrature did not converge (tau={prot.tau:.6g})")


def husimi_solutions(prot, rtol=1e-10):
    """Integrate x'' + Delta(t)^2 x = 0 for the X (0, 1) and Y (1, 0) solutions.

    Returns ``(X, X', Y, Y')`` at ``t = tau``.
    """
    def rhs(t, y):
        w2 = float(ramp_detuning(prot, min(max(t, 0.0), prot.tau))) ** 2
        return [y[1], -w2 * y[0], y[3], -w2 * y[2]]

    sol = solve_ivp(rhs, (0.0, prot.tau), [0.0, 1.0, 1.0, 0.0], method="DOP853",
                    rtol=rtol, atol=rtol * 1e-2)
    if not sol.success:
        raise NumericError(f"Husimi integration failed: {sol.message}")
    return tuple(sol.y[:, -1])


def adiabatic_parameter(prot, rtol=1e-10):
    """Husimi's Q* for the stroke; 1 for adiabatic following."""
    x, xd, y, yd = husimi_solutions(prot, rtol)
    wi, wf = prot.delta_i, prot.delta_f
    return (wi**2 * (wf**2 * x**2 + xd**2) + (wf**2 * y**2 + yd**2)) / (2 * wi * wf)


def laser_amplitude_schedule(prot, t, alpha, kappa=1.0):
    """Drive amplitude keeping the classical cavity amplitude ``alpha`` fixed."""
    return alpha * (1j * kappa - ramp_detuning(prot, t))
