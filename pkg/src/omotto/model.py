"""System parameters and the phase-space drift/diffusion matrices.

Mode ordering throughout is ``(a, a^dag, b, b^dag)``, i.e. the positive-P
variables ``(alpha, alpha+, beta, beta+)``. Rates are in units of kappa.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import UsageError, ValidationError
from . import protocol as _prot

HOT = "hot-isochoric"
STROKE_INT = "stroke-with-interaction"
STROKE_FREE = "stroke-free"
CUSTOM = "custom"
FRAMES = (HOT, STROKE_INT, STROKE_FREE, CUSTOM)


@dataclass(frozen=True)
class SystemParams:
    kappa: float = 1.0
    gamma: float = 0.01
    G: float = 1.0
    lam: float = 0.0
    omega_m: float = 20.0
    delta: float = 20.0
    n_c: float = 0.01
    n_bar: float = 100.0

    def __post_init__(self):
        for name in ("kappa", "gamma", "G", "lam", "omega_m", "delta", "n_c", "n_bar"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")
        if self.kappa <= 0:
            raise ValidationError("kappa must be positive")
        if self.gamma <= 0:
            raise ValidationError("gamma must be positive")
        if self.G < 0:
            raise ValidationError("G must be non-negative")
        if self.lam < 0:
            raise ValidationError("lam must be non-negative")
        if self.n_c < 0:
            raise ValidationError("n_c: occupation must be non-negative")
        if self.n_bar < 0:
            raise ValidationError("n_bar: occupation must be non-negative")

    def replace(self, **changes):
        return replace(self, **changes)


def make_params(**raw):
    """Build validated :class:`SystemParams` from loose keyword values.

    ``lambda`` is accepted as an alias for ``lam``.
    """
    if "lambda" in raw:
        raw["lam"] = raw.pop("lambda")
    try:
        values = {k: float(v) for k, v in raw.items()}
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"non-numeric parameter: {exc}") from None
    try:
        return SystemParams(**values)
    except TypeError as exc:
        raise ValidationError(str(exc)) from None


def reference_params(lam=0.0, delta_h=20.0):
    """Parameter set of the resonant engine: G = kappa, gamma = 0.01 kappa,
    n_c = 0.01, n_bar = 100 and omega_M = Delta_h."""
    return SystemParams(kappa=1.0, gamma=0.01, G=1.0, lam=lam, omega_m=delta_h,
                        delta=delta_h, n_c=0.01, n_bar=100.0)


def cooperativity(p):
    return 4 * p.G**2 / (p.kappa * p.gamma)


def stability_bound(p):
    """Largest parametric drive for which the hot isochoric drift is stable."""
    return min(p.gamma * (1 + cooperativity(p)) / 2, (p.gamma + p.kappa) / 2)


def drift_matrix(p, frame=HOT, t=0.0, protocol=None, include_cd=False, nonadiabatic=True):
    """Drift matrix A of the positive-P Fokker-Planck equation.

    Parameters
    ----------
    p : SystemParams
    frame : str
        ``"hot-isochoric"``: frame rotating at omega_M with Delta = omega_M and
        the parametric drive on. ``"stroke-with-interaction"`` /
        ``"stroke-free"``: detuning follows ``protocol``, drive off, the
        optomechanical coupling on/off. ``"custom"``: static detuning
        ``p.delta`` with the drive phase ``exp(-2i omega_M t)``.
    t : float or array
        Time(s); an array of shape ``s`` gives a result of shape ``s + (4, 4)``.
    protocol : DetuningProtocol
        Required for the stroke frames.
    include_cd : bool
        Add the counter-diabatic term.
    nonadiabatic : bool
        In the stroke frames, keep the ``Delta'/(2 Delta)`` coupling between
        ``a`` and ``a^dag`` that comes from following the instantaneous
        eigenmode of the ramped oscillator. Without it the matrix is the bare
        rotating-wave form and the stroke is trivially adiabatic.
    """
    if frame not in FRAMES:
        raise UsageError(f"unknown frame {frame!r}")
    t = np.asarray(t, dtype=float)
    A = np.zeros(t.shape + (4, 4), dtype=complex)
    k2, g2, G = p.kappa / 2, p.gamma / 2, p.G
    A[..., 0, 0] = -k2
    A[..., 1, 1] = -k2
    A[..., 2, 2] = -g2
    A[..., 3, 3] = -g2
    if frame in (STROKE_INT, STROKE_FREE):
        if protocol is None:
            raise UsageError(f"frame {frame!r} needs a protocol")
        delta, d1, _ = _prot._evaluate(protocol, t)
        A[..., 0, 0] -= 1j * delta
        A[..., 1, 1] += 1j * delta
        A[..., 2, 2] -= 1j * p.omega_m
        A[..., 3, 3] += 1j * p.omega_m
        c = d1 / (2 * delta)
        squeeze = (c if nonadiabatic else 0.0) - (c if include_cd else 0.0)
        A[..., 0, 1] = squeeze
        A[..., 1, 0] = squeeze
        if frame == STROKE_FREE:
            return A
    elif include_cd:
        raise UsageError("counter-diabatic driving applies to stroke frames only")
    A[..., 0, 2] = -1j * G
    A[..., 1, 3] = 1j * G
    A[..., 2, 0] = -1j * G
    A[..., 3, 1] = 1j * G
    if frame == HOT:
        A[..., 2, 3] = p.lam
        A[..., 3, 2] = p.lam
    elif frame == CUSTOM:
        A[..., 0, 0] -= 1j * p.delta
        A[..., 1, 1] += 1j * p.delta
        A[..., 2, 2] -= 1j * p.omega_m
        A[..., 3, 3] += 1j * p.omega_m
        phase = np.exp(-2j * p.omega_m * t)
        A[..., 2, 3] = p.lam * phase
        A[..., 3, 2] = p.lam * np.conj(phase)
    return A


def diffusion_matrix(p, cavity_bath_occupation, drive_phase=1.0):
    """Symmetric diffusion matrix D (so that D = B B^T for the noise factor B).

    ``drive_phase`` multiplies the parametric entries of the mechanical block;
    it is 1 in the hot-isochoric rotating frame.
    """
    occ = float(cavity_bath_occupation)
    if not occ >= 0:
        raise ValidationError("cavity bath occupation must be non-negative")
    D = np.zeros((4, 4), dtype=complex)
    D[0, 1] = D[1, 0] = p.kappa * occ
    D[2, 3] = D[3, 2] = p.gamma * p.n_bar
    D[2, 2] = p.lam * drive_phase
    D[3, 3] = p.lam * np.conj(drive_phase)
    return D


def drift_eigenvalues(A):
    """Eigenvalues of ``A`` sorted by real part, largest first."""
    ev = np.linalg.eigvals(np.asarray(A))
    return ev[np.argsort(-ev.real, kind="stable")]


def is_stable(A):
    return bool(drift_eigenvalues(A)[0].real < 0)
