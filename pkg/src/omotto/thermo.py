"""Work statistics, efficiencies and the assembled Otto cycle.

Sign convention: ``mean_work < 0`` means work is extracted; efficiencies
use ``-<W>``. All energies are in units of kappa.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.linalg import expm
from scipy.optimize import brentq

from . import protocol as _prot
from .dynamics import (APPENDIX_C, BATH_POLICIES, _grid, _rk4, bath_occupation, default_step,
                       extra_heat, phase_averaged, stroke_diffusion, stroke_drift,
                       stroke_initial_state, GaussianState)
from .errors import (ConvergenceError, NumericError, RefrigeratorError, RootNotFoundError,
                     TrapInversionError, ValidationError)
from .model import HOT, SystemParams, diffusion_matrix, drift_matrix, reference_params, stability_bound
from .steady import effective_hot_occupation, hot_steady

_PATH_STEPS = 64


def _braces(z_hot, z_cold, r, qs, hot):
    """Expression inside the ``{...}^(-1/2)`` of the hot/cold factor.

    ``z_hot = (u - v) Delta_h`` and ``z_cold = u Delta_l``; ``r = n / (n + 1)``.
    """
    e = np.exp
    if hot:
        return (qs * (1 - e(2j * z_cold)) * (1 - e(-2j * z_hot) * r**2)
                + (1 + e(2j * z_cold)) * (1 + e(-2j * z_hot) * r**2)
                - 4 * e(-1j * z_hot) * e(1j * z_cold) * r)
    return (qs * (1 - e(2j * z_hot)) * (1 - e(-2j * z_cold) * r**2)
            + (1 + e(2j * z_hot)) * (1 + e(-2j * z_cold) * r**2)
            - 4 * e(1j * z_hot) * e(-1j * z_cold) * r)


def _tracked_inv_sqrt(z):
    """``z**(-1/2)`` along a path, continuing the branch from the first point."""
    w = 1.0 / np.sqrt(z)
    out = np.empty_like(w)
    out[0] = w[0]
    for k in range(1, len(w)):
        cand = w[k] if abs(w[k] - out[k - 1]) <= abs(w[k] + out[k - 1]) else -w[k]
        if abs(cand - out[k - 1]) > 0.5 * abs(out[k - 1]):
            raise NumericError("branch tracking failed: discontinuity along the evaluation path")
        out[k] = cand
    return out[-1]


def char_function(u, v, delta_l, delta_h, n_c, n_h, q_star):
    """Characteristic function chi(u, v) of the joint work/heat distribution.

    Each square root is continued from chi(0, 0) = 1 along the straight path
    from the origin to (u, v) in 64 steps.
    """
    if n_c < 0 or n_h < 0:
        raise ValidationError("occupations must be non-negative")
    if q_star < 1 - 1e-12:
        raise ValidationError("Q* must be >= 1")
    s = np.linspace(0.0, 1.0, _PATH_STEPS + 1)
    zh = s * (u - v) * delta_h
    zc = s * u * delta_l
    chi = 1.0 + 0j
    for n, hot in ((n_h, True), (n_c, False)):
        r = n / (n + 1)
        chi *= np.sqrt(2) / (n + 1) * _tracked_inv_sqrt(_braces(zh, zc, r, q_star, hot))
    return complex(chi)


def _log_derivative(f, h):
    def central(hh):
        return (np.log(f(hh)) - np.log(f(-hh))) / (2 * hh)
    return (4 * central(h / 2) - central(h)) / 3


def mean_work_heat(delta_l, delta_h, n_c, n_h, q_star, residue_tol=1e-8):
    """(<W>, <Q>) from log-derivatives of the characteristic function.

    Central differences with one Richardson step (h and h/2).
    """
    h = 1e-4 / max(delta_h, 1.0)
    args = (delta_l, delta_h, n_c, n_h, q_star)
    dw = -1j * _log_derivative(lambda x: char_function(x, 0.0, *args), h)
    dq = -1j * _log_derivative(lambda x: char_function(0.0, x, *args), h)
    for name, val in (("work", dw), ("heat", dq)):
        if abs(val.imag) > residue_tol * max(1.0, abs(val.real)):
            raise NumericError(f"mean {name} has imaginary residue {val.imag:.3g}")
    return float(dw.real), float(dq.real)


def eta_otto(delta_l, delta_h):
    if delta_l > delta_h:
        raise ValidationError("delta_l must not exceed delta_h")
    return 1.0 - delta_l / delta_h


def eta_th(delta_l, delta_h, n_c, n_h, q_star):
    """Closed-form non-adiabatic thermal efficiency."""
    den = (n_h + 0.5) - q_star * (n_c + 0.5)
    if den <= 0:
        raise RefrigeratorError(f"heat denominator {den:.6g} <= 0: not an engine")
    return 1.0 - delta_l / delta_h * (q_star * (n_h + 0.5) - (n_c + 0.5)) / den


@dataclass(frozen=True)
class CycleConfig:
    """One Otto cycle.

    ``lam`` overrides ``params.lam`` when given. The hot stroke is resonant,
    so ``params.omega_m`` must equal ``delta_h``. Numerical strokes include
    the optomechanical coupling only if ``include_om_in_strokes``; their
    dissipators can be switched off with ``stroke_dissipation=False``.
    """

    params: SystemParams = field(default_factory=reference_params)
    delta_l: float = 10.0
    delta_h: float = 20.0
    tau: float = 0.1
    lam: Optional[float] = None
    bath_policy: str = APPENDIX_C
    sta: bool = False
    include_om_in_strokes: bool = False
    stroke_dissipation: bool = True
    cold_state: str = "thermal"
    phase_average: bool = True
    step: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.delta_l < self.delta_h:
            raise ValidationError("need 0 < delta_l < delta_h")
        if not np.isclose(self.params.omega_m, self.delta_h, rtol=1e-12, atol=0):
            raise ValidationError("hot stroke must be resonant: omega_m == delta_h")
        if not self.tau > 0:
            raise ValidationError("tau must be positive")
        if self.bath_policy not in BATH_POLICIES:
            raise ValidationError(f"unknown bath policy {self.bath_policy!r}")
        if self.lam is not None and self.lam < 0:
            raise ValidationError("lam must be non-negative")

    @classmethod
    def reference(cls, lam=0.0, tau=0.1, delta_h=20.0, **kw):
        """Cycle with the reference parameters and delta_l = delta_h / 2."""
        return cls(reference_params(lam, delta_h), delta_h / 2, delta_h, tau, **kw)

    @property
    def hot_params(self):
        lam = self.params.lam if self.lam is None else self.lam
        return self.params.replace(lam=lam, delta=self.delta_h)

    def with_tau(self, tau):
        return replace(self, tau=tau)

    def compression(self):
        return _prot.DetuningProtocol.compression(self.delta_l, self.delta_h, self.tau, sta=self.sta)

    def expansion(self):
        return _prot.DetuningProtocol.expansion(self.delta_h, self.delta_l, self.tau, sta=self.sta)


@dataclass
class CycleReport:
    """Cycle energetics and efficiencies.

    ``w_num``, ``q_num`` and ``eta_num`` come from propagating the moments
    around the cycle and reading cavity energies at the stroke ends. This
    estimator is our own reconstruction, not a published definition.
    """

    mean_work: float
    mean_heat: float
    q_star: float
    n_h: float
    n_c: float
    sta_energy_total: float
    extra_heat_total: float
    extra_heat_c: float
    extra_heat_e: float
    eta_otto: float
    eta_th: float
    eta_th_prime: float
    eta_sta: float
    eta_sta_prime: float
    w_num: float = float("nan")
    q_num: float = float("nan")
    eta_num: float = float("nan")
    stroke_dissipation_work: float = float("nan")
    stalled: bool = False

    @property
    def w_out(self):
        return -self.mean_work


def _cycle_occupations(cycle):
    return cycle.params.n_c, effective_hot_occupation(cycle.hot_params)


def cycle_q_star(cycle):
    """Q* of the compression stroke (the expansion ramp is its time reverse)."""
    return _prot.adiabatic_parameter(cycle.compression())


def sta_energy_total(cycle, n_c=None, n_h=None):
    """Sum of the time-averaged STA energies of both work strokes.

    The reference energy of each stroke is the cavity energy at its start:
    Delta_l (n_c + 1/2) for compression, Delta_h (n_h + 1/2) for expansion.
    """
    if n_c is None or n_h is None:
        n_c, n_h = _cycle_occupations(cycle)
    comp = _prot.DetuningProtocol.compression(cycle.delta_l, cycle.delta_h, cycle.tau)
    exp_ = _prot.DetuningProtocol.expansion(cycle.delta_h, cycle.delta_l, cycle.tau)
    return (_prot.sta_energy_average(comp, cycle.delta_l * (n_c + 0.5))
            + _prot.sta_energy_average(exp_, cycle.delta_h * (n_h + 0.5)))


def extra_heat_total(cycle, parts=False):
    """Sum of the coupling-induced extra heats of both strokes (CD term excluded)."""
    p = cycle.hot_params
    if p.G == 0:
        return (0.0, 0.0) if parts else 0.0
    comp = _prot.DetuningProtocol.compression(cycle.delta_l, cycle.delta_h, cycle.tau)
    exp_ = _prot.DetuningProtocol.expansion(cycle.delta_h, cycle.delta_l, cycle.tau)
    init_c = stroke_initial_state(_prot.COMPRESSION, p, delta_l=cycle.delta_l, cold_state=cycle.cold_state)
    init_e = stroke_initial_state(_prot.EXPANSION, p, phase_average=cycle.phase_average)
    kw = dict(bath_policy=cycle.bath_policy, dissipative=cycle.stroke_dissipation, step=cycle.step)
    ec = extra_heat(_prot.COMPRESSION, comp, p, initial=init_c, **kw)
    ee = extra_heat(_prot.EXPANSION, exp_, p, initial=init_e, **kw)
    return (ec, ee) if parts else ec + ee


def _efficiency(w, q):
    if q <= 0:
        raise RefrigeratorError(f"heat denominator {q:.6g} <= 0: not an engine")
    return -w / q


def eta_sta(cycle):
    """STA efficiency: adiabatic work over adiabatic heat plus the STA energies."""
    n_c, n_h = _cycle_occupations(cycle)
    w1, q1 = mean_work_heat(cycle.delta_l, cycle.delta_h, n_c, n_h, 1.0)
    return _efficiency(w1, q1 + sta_energy_total(cycle, n_c, n_h))


def eta_sta_prime(cycle, extra=None):
    """``eta_sta`` with the coupling-induced extra heat added to the denominator."""
    n_c, n_h = _cycle_occupations(cycle)
    w1, q1 = mean_work_heat(cycle.delta_l, cycle.delta_h, n_c, n_h, 1.0)
    extra = extra_heat_total(cycle) if extra is None else extra
    return _efficiency(w1, q1 + sta_energy_total(cycle, n_c, n_h) + extra)


def eta_th_prime(cycle, extra=None, q_star=None):
    """Non-adiabatic efficiency with the extra heat added to the denominator."""
    n_c, n_h = _cycle_occupations(cycle)
    q_star = cycle_q_star(cycle) if q_star is None else q_star
    w, q = mean_work_heat(cycle.delta_l, cycle.delta_h, n_c, n_h, q_star)
    extra = extra_heat_total(cycle) if extra is None else extra
    return _efficiency(w, q + extra)


def relax_isochoric(p, initial, tol=1e-8, max_time=None):
    """Relax ``initial`` under the hot isochoric dynamics until it stops changing.

    Exact propagation with the matrix exponential of the affine moment map,
    in chunks of 1/min(kappa, gamma (1 - lam/lam_max)). Raises
    ConvergenceError when the relative change per chunk is still above
    ``tol`` after ``max_time`` (default 100 chunks).
    """
    A = drift_matrix(p, HOT)
    D = diffusion_matrix(p, p.n_c)
    rate = min(p.kappa, p.gamma * (1 - p.lam / stability_bound(p)))
    if rate <= 0:
        raise ConvergenceError("no relaxation: drive at or beyond the stability bound")
    chunk = 1.0 / rate
    max_time = 100 * chunk if max_time is None else max_time
    eye = np.eye(4)
    L = np.kron(A, eye) + np.kron(eye, A)
    aug = np.zeros((17, 17), dtype=complex)
    aug[:16, :16] = L
    aug[:16, 16] = D.reshape(-1)
    M = expm(aug * chunk)
    x = np.append(initial.moments.reshape(-1), 1.0)
    t = 0.0
    while t < max_time:
        new = M @ x
        t += chunk
        change = np.abs(new - x).max() / max(1.0, np.abs(new[:16]).max())
        x = new
        if change < tol:
            return GaussianState(moments=x[:16].reshape(4, 4), time=t)
    raise ConvergenceError(f"isochoric relaxation residual {change:.3g} > {tol:g} after t={t:.4g}")


def _stroke_pair(initial, prot, p, cycle):
    """Final cavity energy change of a numerical stroke, with and without dissipation."""
    with_om = cycle.include_om_in_strokes
    step = default_step(prot, p) if cycle.step is None else cycle.step
    nsteps, h, tg = _grid(prot.tau, step, 0.0)
    occ = bath_occupation(prot.direction, p, cycle.bath_policy)
    A = np.stack([stroke_drift(p, prot, with_om, dissipative=d)(tg) for d in (True, False)], axis=1)
    D = np.stack([stroke_diffusion(p, prot, occ if d else 0.0, dissipative=d)(tg) for d in (True, False)], axis=1)
    S0 = np.broadcast_to(initial.moments, (2, 4, 4)).copy()
    mu0 = np.broadcast_to(initial.mean, (2, 4)).copy()
    _, rec = _rk4(A, D, mu0, S0, h, nsteps)
    n0, n1 = rec[0][:, 0, 1].real, rec[-1][:, 0, 1].real
    de = prot.delta_f * (n1 + 0.5) - prot.delta_i * (n0 + 0.5)
    return de, rec[-1]


def _numerical_cycle(cycle):
    p = cycle.hot_params
    comp, exp_ = cycle.compression(), cycle.expansion()
    rho1 = stroke_initial_state(_prot.COMPRESSION, p, delta_l=cycle.delta_l, cold_state=cycle.cold_state)
    de_c, rho2 = _stroke_pair(rho1, comp, p, cycle)
    rho3 = stroke_initial_state(_prot.EXPANSION, p, phase_average=cycle.phase_average)
    de_e, _ = _stroke_pair(rho3, exp_, p, cycle)
    k = 0 if cycle.stroke_dissipation else 1
    q_num = cycle.delta_h * (rho3.n_a - rho2[k, 0, 1].real)
    w_num = de_c[k] + de_e[k]
    diag = (de_c[0] + de_e[0]) - (de_c[1] + de_e[1])
    return w_num, q_num, diag


def run_cycle(cycle: CycleConfig, numerical=True) -> CycleReport:
    """Analytic efficiencies plus (optionally) a numerical run of the four strokes.

    The hot isochoric stroke is taken to its Lyapunov steady state directly.
    STA efficiencies are NaN when ``tau <= tau_min`` and ``sta`` is off; with
    ``sta`` on that case raises TrapInversionError.
    """
    p = cycle.hot_params
    n_c, n_h = _cycle_occupations(cycle)
    q_star = cycle_q_star(cycle)
    w, q = mean_work_heat(cycle.delta_l, cycle.delta_h, n_c, n_h, q_star)
    w1, q1 = mean_work_heat(cycle.delta_l, cycle.delta_h, n_c, n_h, 1.0)
    ec, ee = extra_heat_total(cycle, parts=True)
    extra = ec + ee
    nan = float("nan")

    def safe(f, *a):
        try:
            return f(*a)
        except RefrigeratorError:
            return nan

    try:
        h_sta = sta_energy_total(cycle, n_c, n_h)
    except TrapInversionError:
        if cycle.sta:
            raise
        h_sta = nan
    report = CycleReport(
        mean_work=w, mean_heat=q, q_star=q_star, n_h=n_h, n_c=n_c,
        sta_energy_total=h_sta, extra_heat_total=extra, extra_heat_c=ec, extra_heat_e=ee,
        eta_otto=eta_otto(cycle.delta_l, cycle.delta_h),
        eta_th=safe(eta_th, cycle.delta_l, cycle.delta_h, n_c, n_h, q_star),
        eta_th_prime=safe(_efficiency, w, q + extra),
        eta_sta=nan if np.isnan(h_sta) else safe(_efficiency, w1, q1 + h_sta),
        eta_sta_prime=nan if np.isnan(h_sta) else safe(_efficiency, w1, q1 + h_sta + extra),
        stalled=w >= 0,
    )
    if numerical:
        w_num, q_num, diag = _numerical_cycle(cycle)
        report.w_num, report.q_num, report.stroke_dissipation_work = w_num, q_num, diag
        report.eta_num = -w_num / q_num if q_num > 0 else nan
    return report


def find_tau_min(delta_i, delta_f, ramp="quintic"):
    """Shortest stroke time free of trap inversion."""
    return _prot.minimal_duration(delta_i, delta_f, ramp)


def _gap(cycle, tau, with_om):
    c = cycle.with_tau(tau)
    n_c, n_h = _cycle_occupations(c)
    q_star = cycle_q_star(c)
    w, q = mean_work_heat(c.delta_l, c.delta_h, n_c, n_h, q_star)
    w1, q1 = mean_work_heat(c.delta_l, c.delta_h, n_c, n_h, 1.0)
    extra = extra_heat_total(c) if with_om else 0.0
    return _efficiency(w1, q1 + sta_energy_total(c, n_c, n_h) + extra) - _efficiency(w, q + extra)


def find_tau_cri(cycle, with_om=False, tau_hi=10.0, rtol=1e-6, eps0=1e-6):
    """Critical stroke time where the STA and non-adiabatic efficiencies meet.

    Compares eta_STA with eta_th (or the primed pair when ``with_om``). The
    gap is negative just above tau_min; the first sign change on a geometric
    grid ``tau_min (1 + eps0 2^k)`` up to ``tau_hi`` is refined with Brent's
    method to relative tolerance ``rtol``.
    """
    tmin = find_tau_min(cycle.delta_l, cycle.delta_h)
    grid = []
    eps = eps0
    while tmin * (1 + eps) < tau_hi:
        grid.append(tmin * (1 + eps))
        eps *= 2
    grid.append(tau_hi)
    prev_t, prev_f = grid[0], _gap(cycle, grid[0], with_om)
    first_f = prev_f
    for t in grid[1:]:
        f = _gap(cycle, t, with_om)
        if np.sign(f) != np.sign(prev_f):
            return brentq(lambda x: _gap(cycle, x, with_om), prev_t, t, xtol=rtol * prev_t, rtol=1e-12)
        prev_t, prev_f = t, f
    raise RootNotFoundError(f"no sign change on ({grid[0]:.6g}, {tau_hi:g}]: "
                            f"gap {first_f:.6g} at start, {prev_f:.6g} at end")


def map_cycles(func, cycles, jobs=1):
    """Apply ``func`` to each cycle, optionally on a thread pool; order is preserved."""
    cycles = list(cycles)
    if jobs <= 1:
        return [func(c) for c in cycles]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, cycles))
