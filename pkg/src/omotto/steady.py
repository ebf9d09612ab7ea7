"""Non-equilibrium steady states of the isochoric configurations."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import StabilityError
from .model import HOT, diffusion_matrix, drift_eigenvalues, drift_matrix, stability_bound


@dataclass(frozen=True)
class SteadyCorrelations:
    """Normally ordered steady-state moments.

    ``moments`` is the full matrix of <alpha_i alpha_j> over
    (alpha, alpha+, beta, beta+); it is ``None`` for the closed-form route.
    """

    n_a: float
    n_b: float
    ab_cross: complex
    b_squared: complex
    moments: Optional[np.ndarray] = None


def solve_lyapunov(A, D):
    """Solve A X + X A^T + D = 0 through the Kronecker-sum linear system.

    Note the plain transpose: scipy's ``solve_continuous_lyapunov`` uses the
    conjugate transpose, which is wrong for the complex positive-P drift.
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    eye = np.eye(n)
    M = np.kron(A, eye) + np.kron(eye, A)
    X = np.linalg.solve(M, -np.asarray(D, dtype=complex).reshape(-1)).reshape(n, n)
    return (X + X.T) / 2


def correlations_from_moments(S):
    S = np.asarray(S)
    return SteadyCorrelations(
        n_a=float(S[0, 1].real),
        n_b=float(S[2, 3].real),
        ab_cross=complex(S[1, 2]),
        b_squared=complex(S[2, 2]),
        moments=S,
    )


def lyapunov_steady(A, D):
    ev = drift_eigenvalues(A)
    if ev[0].real >= 0:
        raise StabilityError(f"drift matrix is unstable (eigenvalue {ev[0]:.6g})", eigenvalue=complex(ev[0]))
    return correlations_from_moments(solve_lyapunov(A, D))


def hot_steady(p):
    """Lyapunov steady state of the resonant hot isochoric configuration."""
    return lyapunov_steady(drift_matrix(p, HOT), diffusion_matrix(p, p.n_c))


def analytic_correlations(p):
    """Closed-form steady-state correlations of the resonant hot configuration.

    Returns <a^dag a>, <b^dag b>, <a^dag b> and <b^2>. The <b^2> expression
    carries the factor 1/2 shared by the two occupations; without it the
    result is twice the Lyapunov value.
    """
    lam_max = stability_bound(p)
    if p.lam >= lam_max:
        raise StabilityError(f"lambda={p.lam:.6g} at or beyond the stability bound {lam_max:.6g}")
    k, g, G, lam, nc, nb = p.kappa, p.gamma, p.G, p.lam, p.n_c, p.n_bar
    G4 = 4 * G**2
    den_m = (G4 + k * (g - 2 * lam)) * (g + k - 2 * lam)
    den_p = (G4 + k * (g + 2 * lam)) * (g + k + 2 * lam)
    na = 0.5 * ((k * nc * (g - 2 * lam) * (g + k - 2 * lam) + G4 * (g * nb + k * nc + lam)) / den_m
                + (k * nc * (g + 2 * lam) * (g + k + 2 * lam) + G4 * (g * nb + k * nc - lam)) / den_p)
    mech_m = (k * (g + k - 2 * lam) * (nb * g + lam) + G4 * (g * nb + k * nc + lam)) / den_m
    mech_p = (k * (g + k + 2 * lam) * (nb * g - lam) + G4 * (g * nb + k * nc - lam)) / den_p
    ab = 1j * G * k * (((nb - nc) * g + (1 + 2 * nc) * lam) / den_m
                       + ((nb - nc) * g - (1 + 2 * nc) * lam) / den_p)
    return SteadyCorrelations(n_a=na, n_b=0.5 * (mech_m + mech_p), ab_cross=ab,
                              b_squared=complex(0.5 * (mech_m - mech_p)))


def effective_hot_occupation(p):
    """Cavity occupation of the hot isochoric steady state, n_h."""
    return analytic_correlations(p).n_a
