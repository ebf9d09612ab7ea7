"""Positive-P stochastic trajectories, used as an independent check on the
moment equations.

The model is quadratic, so the Ito equations are linear:
``dx = A(t) x dt + B(t) dW`` with four real Wiener increments per step and
``B B^T = D``. Trajectories are run in fixed-size blocks; block ``k`` draws
from a Philox generator seeded by the ``k``-th child of the master
``SeedSequence``, so the output depends only on the seed and the
configuration, never on the thread count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import protocol as _prot
from .dynamics import (APPENDIX_C, BATH_POLICIES, GaussianState, bath_occupation, default_step,
                       propagate_moments, stroke_diffusion, stroke_drift, stroke_initial_state)
from .errors import DivergenceError, UsageError, ValidationError
from .model import HOT, SystemParams, diffusion_matrix, drift_matrix

HOT_ISOCHORIC = "hot-isochoric"
STROKES = (_prot.COMPRESSION, _prot.EXPANSION, HOT_ISOCHORIC)
BLOCK_SIZE = 2048


@dataclass(frozen=True)
class EnsembleConfig:
    """Settings of a stochastic ensemble.

    ``protocol`` is required for the work strokes; the hot isochoric stroke
    runs for ``span`` at fixed detuning ``params.delta``. ``initial`` defaults
    to the stroke's initial state (the thermal product for the hot stroke).
    """

    params: SystemParams
    stroke: str
    protocol: Optional[_prot.DetuningProtocol] = None
    bath_policy: str = APPENDIX_C
    n_traj: int = 10_000
    step: Optional[float] = None
    seed: int = 0
    span: float = 1.0
    n_samples: int = 11
    with_interaction: bool = True
    include_cd: Optional[bool] = None
    dissipative: bool = True
    initial: Optional[GaussianState] = field(default=None, compare=False)

    def __post_init__(self):
        if self.stroke not in STROKES:
            raise ValidationError(f"unknown stroke {self.stroke!r}")
        if self.bath_policy not in BATH_POLICIES:
            raise ValidationError(f"unknown bath policy {self.bath_policy!r}")
        if self.stroke != HOT_ISOCHORIC:
            if self.protocol is None:
                raise UsageError(f"stroke {self.stroke!r} needs a protocol")
            if self.protocol.direction != self.stroke:
                raise UsageError("stroke and protocol direction disagree")
        if self.n_traj < 100:
            raise ValidationError("n_traj must be at least 100")
        if self.step is not None and self.step > self.duration / 500 * (1 + 1e-12):
            raise ValidationError(f"step {self.step:.3g} exceeds duration/500")
        if self.n_samples < 2:
            raise ValidationError("n_samples must be at least 2")

    @property
    def duration(self):
        return self.span if self.stroke == HOT_ISOCHORIC else self.protocol.tau


@dataclass
class EnsembleStats:
    times: np.ndarray
    occupation: np.ndarray  # ensemble mean of alpha_1 alpha_2 (complex)
    occupation_se: np.ndarray  # standard error of the real part
    occupation_imag_se: np.ndarray
    energy: np.ndarray
    energy_se: np.ndarray
    n_traj: int


def pair_factor(c, m):
    """2x2 factor ``B`` with ``B B^T = [[c, m], [m, c]]`` (arrays broadcast)."""
    c = np.asarray(c, dtype=complex)
    m = np.asarray(m, dtype=complex)
    x = np.sqrt((c + m) / 2)
    y = np.sqrt((c - m) / 2)
    B = np.empty(np.broadcast(c, m).shape + (2, 2), dtype=complex)
    B[..., 0, 0] = y
    B[..., 0, 1] = x
    B[..., 1, 0] = -y
    B[..., 1, 1] = x
    return B


def factor_diffusion(D, atol=1e-12):
    """Noise factor for a diffusion matrix made of two pair blocks."""
    D = np.asarray(D, dtype=complex)
    off = np.abs(D[..., :2, 2:]).max(initial=0.0)
    if off > atol or np.abs(D[..., 0, 0] - D[..., 1, 1]).max(initial=0.0) > atol \
            or np.abs(D[..., 2, 2] - D[..., 3, 3]).max(initial=0.0) > atol:
        raise UsageError("diffusion matrix does not have the two-pair block structure")
    B = np.zeros(D.shape, dtype=complex)
    B[..., :2, :2] = pair_factor(D[..., 0, 0], D[..., 0, 1])
    B[..., 2:, 2:] = pair_factor(D[..., 2, 2], D[..., 2, 3])
    return B


def noise_factor(p, stroke, bath_policy=APPENDIX_C, protocol=None, t=0.0):
    """Noise matrix ``B`` with ``B B^T = D`` for the given stroke.

    Without a protocol this is the static matrix, with entries
    ``sqrt(kappa n)/sqrt(2)`` and ``sqrt(gamma n_bar)/sqrt(2)`` (plus the
    parametric entries for the hot isochoric stroke). With a protocol the
    time-dependent squeezing diffusion of the stroke is included at ``t``.
    """
    if stroke == HOT_ISOCHORIC:
        return factor_diffusion(diffusion_matrix(p, p.n_c))
    if stroke not in STROKES:
        raise ValidationError(f"unknown stroke {stroke!r}")
    occ = bath_occupation(stroke, p, bath_policy)
    if protocol is None:
        return factor_diffusion(diffusion_matrix(p.replace(lam=0.0), occ))
    return factor_diffusion(stroke_diffusion(p, protocol, occ)(np.asarray(t, dtype=float)))


def sample_initial(state, n, rng):
    """Draw ``n`` complex 4-vectors whose normally ordered moments match ``state``.

    The covariance ``C = S - mu mu^T = X + iY`` is split into real symmetric
    parts and factored as ``L L^T`` with ``L = [U_X sqrt(e_X), U_Y sqrt(i e_Y)]``;
    negative eigenvalues give imaginary columns, which is allowed in the
    positive-P representation.
    """
    mu = state.mean
    C = state.moments - np.outer(mu, mu)
    ex, ux = np.linalg.eigh(C.real)
    ey, uy = np.linalg.eigh(C.imag)
    L = np.hstack([ux * np.sqrt(ex.astype(complex)), uy * np.sqrt(1j * ey)])
    return mu + rng.standard_normal((n, 8)) @ L.T


def _schedule(cfg):
    """Drift, noise factor, detuning and reference initial state on the EM grid."""
    p = cfg.params
    if cfg.stroke == HOT_ISOCHORIC:
        step = cfg.span / 2000 if cfg.step is None else cfg.step
        nsteps = max(int(round(cfg.span / step)), 1)
        h = cfg.span / nsteps
        A = np.broadcast_to(drift_matrix(p, HOT), (nsteps, 4, 4))
        D = diffusion_matrix(p, p.n_c)
        B = np.broadcast_to(factor_diffusion(D), (nsteps, 4, 4))
        init = cfg.initial if cfg.initial is not None else GaussianState.thermal(p.n_c, p.n_bar)
        return A, B, h, nsteps, lambda s: np.full(np.shape(s), p.delta), init, (A[0], D)
    prot = cfg.protocol
    step = default_step(prot, p) if cfg.step is None else cfg.step
    nsteps = max(int(round(prot.tau / step)), 1)
    h = prot.tau / nsteps
    t = h * np.arange(nsteps)
    occ = bath_occupation(cfg.stroke, p, cfg.bath_policy) if cfg.dissipative else 0.0
    drift = stroke_drift(p, prot, cfg.with_interaction, cfg.include_cd, cfg.dissipative)
    diff = stroke_diffusion(p, prot, occ, cfg.include_cd, cfg.dissipative)
    init = cfg.initial
    if init is None:
        init = stroke_initial_state(cfg.stroke, p, delta_l=prot.delta_i)
    return (drift(t), factor_diffusion(diff(t)), h, nsteps,
            lambda s: _prot.ramp_detuning(prot, s), init, (drift, diff))


def _run_block(k, seq, size, offset, A, B, h, sample_idx, init):
    with np.errstate(over="ignore", invalid="ignore"):
        return _em_block(seq, size, offset, A, B, h, sample_idx, init)


def _em_block(seq, size, offset, A, B, h, sample_idx, init):
    rng = np.random.Generator(np.random.Philox(seq))
    x = sample_initial(init, size, rng)
    prop = np.eye(4) + h * A  # Euler step
    sqh = np.sqrt(h)
    out = np.empty((len(sample_idx), size), dtype=complex)
    j = 0
    if sample_idx[0] == 0:
        out[0] = x[:, 0] * x[:, 1]
        j = 1
    for n in range(A.shape[0]):
        dw = rng.standard_normal((size, 4)) * sqh
        x = x @ prop[n].T + dw @ B[n].T
        if j < len(sample_idx) and n + 1 == sample_idx[j]:
            bad = ~np.isfinite(x).all(axis=1)
            if bad.any():
                raise DivergenceError(
                    f"trajectory {offset + int(np.argmax(bad))} diverged at t={(n + 1) * h:.6g}",
                    t=(n + 1) * h, trajectory=offset + int(np.argmax(bad)))
            out[j] = x[:, 0] * x[:, 1]
            j += 1
    re, im = out.real, out.imag
    return (size, re.mean(axis=1), ((re - re.mean(axis=1, keepdims=True)) ** 2).sum(axis=1),
            im.mean(axis=1), ((im - im.mean(axis=1, keepdims=True)) ** 2).sum(axis=1))


def _merge(stats):
    """Combine per-block (count, mean, M2) summaries in block order."""
    n, mr, sr, mi, si = stats[0]
    for nb, mrb, srb, mib, sib in stats[1:]:
        tot = n + nb
        dr, di = mrb - mr, mib - mi
        sr = sr + srb + dr**2 * n * nb / tot
        si = si + sib + di**2 * n * nb / tot
        mr = mr + dr * nb / tot
        mi = mi + di * nb / tot
        n = tot
    return n, mr, sr, mi, si


def simulate_ensemble(cfg: EnsembleConfig, jobs: int = 1) -> EnsembleStats:
    """Run the Euler-Maruyama ensemble and return sampled statistics."""
    A, B, h, nsteps, detuning, init, _ = _schedule(cfg)
    A = np.ascontiguousarray(A)
    B = np.ascontiguousarray(B)
    sample_idx = np.unique(np.round(np.linspace(0, nsteps, cfg.n_samples)).astype(int))
    n_blocks = -(-cfg.n_traj // BLOCK_SIZE)
    seqs = np.random.SeedSequence(cfg.seed).spawn(n_blocks)
    sizes = [min(BLOCK_SIZE, cfg.n_traj - k * BLOCK_SIZE) for k in range(n_blocks)]
    args = [(k, seqs[k], sizes[k], k * BLOCK_SIZE, A, B, h, sample_idx, init) for k in range(n_blocks)]
    if jobs > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            stats = list(pool.map(lambda a: _run_block(*a), args))
    else:
        stats = [_run_block(*a) for a in args]
    n, mr, sr, mi, si = _merge(stats)
    se_r = np.sqrt(sr / (n - 1) / n)
    se_i = np.sqrt(si / (n - 1) / n)
    times = h * sample_idx
    delta = np.asarray(detuning(times), dtype=float)
    return EnsembleStats(times, mr + 1j * mi, se_r, se_i, delta * (mr + 0.5), delta * se_r, n)


def moment_reference(cfg: EnsembleConfig, step=None):
    """Moment-equation trace for the same stroke, initial state and bath policy."""
    _, _, _, nsteps, detuning, init, (drift, diff) = _schedule(cfg)
    span = cfg.duration
    if step is None:
        step = span / 2000 if cfg.stroke == HOT_ISOCHORIC else default_step(cfg.protocol, cfg.params)
    return propagate_moments(GaussianState(init.mean, init.moments, 0.0), drift, diff, span,
                             step=step, detuning=detuning)


def euler_moments(cfg: EnsembleConfig):
    """Exact second moments of the Euler-Maruyama scheme itself.

    The scheme maps ``S -> P S P^T + h B B^T`` with ``P = 1 + h A``; its
    deviation from the moment equations is the discretisation bias of the
    ensemble, free of sampling noise. Returns ``(times, moments)`` at the
    ensemble's sample times.
    """
    A, B, h, nsteps, _, init, _ = _schedule(cfg)
    sample_idx = np.unique(np.round(np.linspace(0, nsteps, cfg.n_samples)).astype(int))
    S = init.moments.copy()
    out = [S] if sample_idx[0] == 0 else []
    for n in range(nsteps):
        P = np.eye(4) + h * A[n]
        S = P @ S @ P.T + h * B[n] @ B[n].T
        if n + 1 in sample_idx:
            out.append(S)
    return h * sample_idx, np.array(out)
