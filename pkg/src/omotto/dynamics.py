"""Gaussian moment dynamics of the work strokes.

For a quadratic model the positive-P moments obey closed linear equations,

    d mu / dt    = A(t) mu
    d S  / dt    = A(t) S + S A(t)^T + D(t),

where ``S`` holds the normally ordered second moments <alpha_i alpha_j>.
These are integrated with a fixed-step classical Runge-Kutta scheme.

During a stroke the cavity is treated as the ramped oscillator whose
instantaneous eigenmode ``a_t`` defines the energy Delta_t (a_t^dag a_t + 1/2).
Following that eigenmode adds a squeezing coupling Delta'/(2 Delta) between
``a`` and ``a^dag``; it is what produces non-adiabatic excitation (Husimi's
Q* > 1) and it is exactly cancelled by the counter-diabatic term.
"""

from dataclasses import dataclass, field

import numpy as np

from . import protocol as _prot
from .errors import DivergenceError, UsageError, ValidationError
from .model import (CUSTOM, STROKE_FREE, STROKE_INT, diffusion_matrix, drift_matrix)
from .steady import effective_hot_occupation, hot_steady, lyapunov_steady

APPENDIX_C = "appendix-c"
COLD_ALWAYS = "cold-always"
BATH_POLICIES = (APPENDIX_C, COLD_ALWAYS)

# entries that rotate as exp(-2i omega t) in the lab frame
_PHASE_SENSITIVE = ((0, 0), (1, 1), (2, 2), (3, 3), (0, 2), (2, 0), (1, 3), (3, 1))


@dataclass
class GaussianState:
    mean: np.ndarray = field(default_factory=lambda: np.zeros(4, dtype=complex))
    moments: np.ndarray = field(default_factory=lambda: np.zeros((4, 4), dtype=complex))
    time: float = 0.0

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=complex).reshape(4)
        self.moments = np.asarray(self.moments, dtype=complex).reshape(4, 4)

    @classmethod
    def thermal(cls, n_a, n_b, time=0.0):
        S = np.zeros((4, 4), dtype=complex)
        S[0, 1] = S[1, 0] = n_a
        S[2, 3] = S[3, 2] = n_b
        return cls(moments=S, time=time)

    @property
    def n_a(self):
        return float(self.moments[0, 1].real)

    @property
    def n_b(self):
        return float(self.moments[2, 3].real)

    @property
    def ab_cross(self):
        return complex(self.moments[1, 2])

    @property
    def b_squared(self):
        return complex(self.moments[2, 2])

    def violations(self, tol=1e-9):
        """Return a list of broken physical invariants (empty if none)."""
        m, S = self.mean, self.moments
        out = []
        if abs(m[1] - np.conj(m[0])) > tol or abs(m[3] - np.conj(m[2])) > tol:
            out.append("first moments not conjugate pairs")
        if abs(S[0, 1].imag) > tol or abs(S[2, 3].imag) > tol:
            out.append("occupations not real")
        if S[0, 1].real < -1e-10 or S[2, 3].real < -1e-10:
            out.append("negative occupation")
        for i in (0, 2):
            n = S[i, i + 1].real
            if abs(S[i, i]) ** 2 > n * (n + 1) + tol:
                out.append(f"Cauchy-Schwarz bound broken for mode {i // 2}")
        return out


@dataclass
class StrokeTrace:
    """Sampled output of a moment propagation (arrays indexed by sample)."""

    times: np.ndarray
    means: np.ndarray
    moments: np.ndarray
    detuning: np.ndarray
    energy: np.ndarray

    def __len__(self):
        return len(self.times)

    def state(self, i):
        return GaussianState(self.means[i], self.moments[i], float(self.times[i]))

    @property
    def final(self):
        return self.state(-1)

    @property
    def occupation(self):
        return self.moments[..., 0, 1].real


def cavity_energy(state, delta):
    return delta * (state.n_a + 0.5)


def _sample(func, times):
    if callable(func):
        return np.asarray(func(times), dtype=complex)
    arr = np.asarray(func, dtype=complex)
    return np.broadcast_to(arr, times.shape + arr.shape)


def _rk4(A, D, mu, S, h, stride):
    """Classical RK4 on the moment equations.

    ``A`` and ``D`` are sampled on the half-step grid (shape ``(2N+1, ..., 4, 4)``).
    Returns lists of recorded means and moments (every ``stride`` steps).
    """
    def rhs(k, S, mu):
        AS = A[k] @ S
        return AS + np.swapaxes(AS, -1, -2) + D[k], (A[k] @ mu[..., None])[..., 0]

    nsteps = (A.shape[0] - 1) // 2
    rec_mu, rec_S = [mu], [S]
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(nsteps):
            S, mu = _rk4_step(rhs, 2 * n, S, mu, h)
            if (n + 1) % stride == 0 or n + 1 == nsteps:
                rec_mu.append(mu)
                rec_S.append(S)
    return rec_mu, rec_S


def _rk4_step(rhs, k, S, mu, h):
    s1, m1 = rhs(k, S, mu)
    s2, m2 = rhs(k + 1, S + 0.5 * h * s1, mu + 0.5 * h * m1)
    s3, m3 = rhs(k + 1, S + 0.5 * h * s2, mu + 0.5 * h * m2)
    s4, m4 = rhs(k + 2, S + h * s3, mu + h * m3)
    return S + h / 6 * (s1 + 2 * s2 + 2 * s3 + s4), mu + h / 6 * (m1 + 2 * m2 + 2 * m3 + m4)


def _grid(span, step, t0):
    if step is None:
        step = span / 2000
    if step > span / 100 * (1 + 1e-12):
        raise ValidationError(f"step {step:.3g} exceeds span/100")
    nsteps = max(int(round(span / step)), 1)
    h = span / nsteps
    return nsteps, h, t0 + 0.5 * h * np.arange(2 * nsteps + 1)


def propagate_moments(initial, drift, diffusion, span, step=None, t0=None, stride=1, detuning=None):
    """Integrate the first and second moments over ``[t0, t0 + span]``.

    Parameters
    ----------
    initial : GaussianState
    drift, diffusion : callable or array
        Callables receive a 1-D array of times and return an array of shape
        ``(len(t), 4, 4)``; constant 4x4 arrays are accepted as well.
    span : float
    step : float, optional
        Integration step, default ``span / 2000``; must not exceed ``span / 100``.
    t0 : float, optional
        Start time, default ``initial.time``.
    stride : int
        Record every ``stride``-th step (the last step is always recorded).
    detuning : callable or float, optional
        Cavity frequency used for the ``energy`` column.
    """
    t0 = initial.time if t0 is None else t0
    nsteps, h, tg = _grid(span, step, t0)
    A = _sample(drift, tg)
    D = _sample(diffusion, tg)
    rec_mu, rec_S = _rk4(A, D, initial.mean, initial.moments, h, stride)
    idx = [0] + [n + 1 for n in range(nsteps) if (n + 1) % stride == 0 or n + 1 == nsteps]
    times = t0 + h * np.asarray(idx, dtype=float)
    means = np.array(rec_mu)
    moments = np.array(rec_S)
    bad = ~np.isfinite(moments).all(axis=(1, 2))
    if bad.any():
        t_bad = float(times[np.argmax(bad)])
        raise DivergenceError(f"moments diverged at t={t_bad:.6g}", t=t_bad)
    if detuning is None:
        delta = np.full(times.shape, np.nan)
    elif callable(detuning):
        delta = np.asarray(detuning(times), dtype=float)
    else:
        delta = np.full(times.shape, float(detuning))
    energy = delta * (moments[:, 0, 1].real + 0.5)
    return StrokeTrace(times, means, moments, delta, energy)


def bath_occupation(stroke, p, policy=APPENDIX_C):
    """Cavity bath occupation used during a work stroke.

    ``appendix-c`` uses n_h for compression and n_c for expansion (the
    assignment of the noise matrices printed for the stochastic equations);
    ``cold-always`` uses n_c for both.
    """
    if policy not in BATH_POLICIES:
        raise ValidationError(f"unknown bath policy {policy!r}")
    if policy == APPENDIX_C and stroke == _prot.COMPRESSION:
        return effective_hot_occupation(p)
    return p.n_c


def _stroke_params(p):
    return p.replace(lam=0.0)


def stroke_drift(p, prot, with_interaction=True, include_cd=None, dissipative=True, nonadiabatic=True):
    """Vectorised drift callable for a work stroke (parametric drive off)."""
    include_cd = prot.sta if include_cd is None else include_cd
    frame = STROKE_INT if with_interaction else STROKE_FREE
    ps = _stroke_params(p)
    undamp = np.diag([p.kappa / 2, p.kappa / 2, p.gamma / 2, p.gamma / 2]).astype(complex)

    def drift(t):
        A = drift_matrix(ps, frame, t, prot, include_cd=include_cd, nonadiabatic=nonadiabatic)
        return A if dissipative else A + undamp

    return drift


def stroke_diffusion(p, prot, occupation, include_cd=None, dissipative=True, nonadiabatic=True):
    """Vectorised diffusion callable for a work stroke.

    The squeezing coupling in the drift comes with matching diagonal diffusion
    entries in the cavity block, just as the parametric drive does for the
    mechanics.
    """
    include_cd = prot.sta if include_cd is None else include_cd
    base = diffusion_matrix(_stroke_params(p), occupation) if dissipative else np.zeros((4, 4), complex)
    weight = (1.0 if nonadiabatic else 0.0) - (1.0 if include_cd else 0.0)

    def diffusion(t):
        t = np.asarray(t, dtype=float)
        D = np.broadcast_to(base, t.shape + (4, 4)).copy()
        if weight != 0.0:
            delta, d1, _ = _prot._evaluate(prot, t)
            c = weight * d1 / (2 * delta)
            D[..., 0, 0] += c
            D[..., 1, 1] += c
        return D

    return diffusion


def phase_averaged(state):
    """Drop the moments that rotate at twice the optical/mechanical frequency."""
    S = state.moments.copy()
    for i, j in _PHASE_SENSITIVE:
        S[i, j] = 0.0
    return GaussianState(np.zeros(4, complex), S, state.time)


def stroke_initial_state(stroke, p, delta_l=None, cold_state="coupled", phase_average=False):
    """Initial state of a work stroke.

    Compression starts from the cold isochoric steady state (drive off,
    detuning ``delta_l``). With ``cold_state="coupled"`` this is the Lyapunov
    steady state including the optomechanical coupling; ``"thermal"`` gives
    the uncorrelated thermal product (n_c, n_bar). Expansion starts from the
    hot isochoric steady state; ``phase_average`` discards its
    phase-sensitive moments.
    """
    if stroke == _prot.COMPRESSION:
        if cold_state == "thermal":
            return GaussianState.thermal(p.n_c, p.n_bar)
        if cold_state != "coupled":
            raise ValidationError(f"unknown cold_state {cold_state!r}")
        if delta_l is None:
            raise UsageError("compression initial state needs delta_l")
        cold = p.replace(lam=0.0, delta=delta_l)
        ss = lyapunov_steady(drift_matrix(cold, CUSTOM), diffusion_matrix(cold, p.n_c))
        return GaussianState(moments=ss.moments)
    if stroke == _prot.EXPANSION:
        state = GaussianState(moments=hot_steady(p).moments)
        return phase_averaged(state) if phase_average else state
    raise ValidationError(f"unknown stroke {stroke!r}")


def default_step(prot, p):
    """tau/2000, refined so that the fastest rotation advances <= 0.01 rad per step."""
    rate = max(prot.delta_i, prot.delta_f, p.omega_m) + p.G + p.kappa
    return prot.tau / max(2000, int(np.ceil(prot.tau * rate / 0.01)))


def run_stroke(initial, prot, p, bath_policy=APPENDIX_C, with_interaction=True, include_cd=None,
               dissipative=True, step=None, stride=1):
    """Propagate ``initial`` through the stroke described by ``prot``."""
    occ = bath_occupation(prot.direction, p, bath_policy) if dissipative else 0.0
    return propagate_moments(
        GaussianState(initial.mean, initial.moments, 0.0),
        stroke_drift(p, prot, with_interaction, include_cd, dissipative),
        stroke_diffusion(p, prot, occ, include_cd, dissipative),
        prot.tau,
        step=default_step(prot, p) if step is None else step,
        stride=stride,
        detuning=lambda t: _prot.ramp_detuning(prot, t),
    )


def extra_heat_profile(stroke, prot, p, bath_policy=APPENDIX_C, initial=None, include_cd=False,
                       dissipative=True, step=None, cold_state="coupled"):
    """Return ``(times, Delta E(t))`` for the twin evolutions with/without coupling.

    Both twins start from the same state and share the bath policy; the
    counter-diabatic term is left out unless ``include_cd`` is set.
    """
    if stroke != prot.direction:
        raise UsageError("stroke and protocol direction disagree")
    if initial is None:
        initial = stroke_initial_state(stroke, p, delta_l=prot.delta_i, cold_state=cold_state)
    if p.G == 0:
        nsteps, h, _ = _grid(prot.tau, default_step(prot, p) if step is None else step, 0.0)
        return h * np.arange(nsteps + 1), np.zeros(nsteps + 1)
    occ = bath_occupation(stroke, p, bath_policy) if dissipative else 0.0
    d_int = stroke_drift(p, prot, True, include_cd, dissipative)
    d_free = stroke_drift(p, prot, False, include_cd, dissipative)
    diff = stroke_diffusion(p, prot, occ, include_cd, dissipative)
    h_step = default_step(prot, p) if step is None else step
    nsteps, h, tg = _grid(prot.tau, h_step, 0.0)
    A = np.stack([d_int(tg), d_free(tg)], axis=1)
    D = diff(tg)[:, None, :, :]
    S0 = np.broadcast_to(initial.moments, (2, 4, 4)).copy()
    mu0 = np.broadcast_to(initial.mean, (2, 4)).copy()
    _, rec_S = _rk4(A, D, mu0, S0, h, 1)
    S = np.array(rec_S)
    if not np.isfinite(S).all():
        raise DivergenceError("twin evolution diverged")
    times = h * np.arange(nsteps + 1)
    delta = _prot.ramp_detuning(prot, times)
    return times, delta * (S[:, 0, 0, 1].real - S[:, 1, 0, 1].real)


def extra_heat(stroke, prot, p, bath_policy=APPENDIX_C, initial=None, include_cd=False,
               dissipative=True, step=None, cold_state="coupled"):
    """Time-averaged extra cavity energy caused by the coupling during a stroke."""
    times, de = extra_heat_profile(stroke, prot, p, bath_policy, initial, include_cd,
                                   dissipative, step, cold_state)
    return float(np.trapezoid(de, times) / prot.tau)
