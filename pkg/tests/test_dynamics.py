import numpy as np
import pytest

from omotto import (DetuningProtocol, GaussianState, cavity_energy, diffusion_matrix,
                    drift_matrix, extra_heat, hot_steady, propagate_moments, reference_params,
                    run_stroke, stroke_initial_state)
from omotto.dynamics import (bath_occupation, extra_heat_profile, phase_averaged, stroke_diffusion,
                             stroke_drift)
from omotto.errors import DivergenceError, UsageError, ValidationError
from omotto.model import CUSTOM, STROKE_FREE
from scipy.linalg import solve_sylvester


def test_relaxes_to_lyapunov_state():
    p = reference_params(0.0)
    A, D = drift_matrix(p), diffusion_matrix(p, p.n_c)
    tr = propagate_moments(GaussianState.thermal(0.0, 0.0), A, D, 50.0, step=0.01)
    S = solve_sylvester(A, A.T, -D)
    assert np.allclose(tr.final.moments, S, rtol=1e-8, atol=1e-8 * np.abs(S).max())


def test_identity_evolution():
    s0 = GaussianState.thermal(0.3, 2.0)
    s0.mean[:] = [1 + 1j, 1 - 1j, 0.5j, -0.5j]
    tr = propagate_moments(s0, np.zeros((4, 4)), np.zeros((4, 4)), 1.0)
    assert np.array_equal(tr.final.moments, s0.moments)
    assert np.array_equal(tr.final.mean, s0.mean)


def test_step_limit_and_divergence():
    with pytest.raises(ValidationError):
        propagate_moments(GaussianState(), np.zeros((4, 4)), np.zeros((4, 4)), 1.0, step=0.5)
    with pytest.raises(DivergenceError) as err:
        propagate_moments(GaussianState.thermal(1, 1), 400 * np.eye(4), np.zeros((4, 4)), 10.0, step=0.01)
    assert err.value.t is not None


def test_dissipation_bound_during_short_stroke():
    p = reference_params()
    prot = DetuningProtocol.compression(10, 20, 0.1)
    drift = lambda t: drift_matrix(p, STROKE_FREE, t, prot, nonadiabatic=False)
    tr = propagate_moments(GaussianState.thermal(1.0, p.n_bar), drift, diffusion_matrix(p, p.n_c), prot.tau)
    assert abs(tr.final.n_a - 1.0) < p.kappa * prot.tau * (p.n_c + 1)


def test_trace_energy_column():
    p = reference_params(0.2)
    tr = run_stroke(GaussianState.thermal(0.01, 100), DetuningProtocol.compression(10, 20, 0.1), p, stride=50)
    assert np.all(np.diff(tr.times) > 0)
    for i in range(len(tr)):
        assert tr.energy[i] == cavity_energy(tr.state(i), tr.detuning[i])
        assert tr.state(i).violations() == []


def test_cavity_energy_examples():
    assert cavity_energy(GaussianState.thermal(0.01, 0), 10) == pytest.approx(5.1)
    assert cavity_energy(GaussianState(), 20) == 10


def test_step_halving():
    p = reference_params(0.2)
    init = phase_averaged(stroke_initial_state("expansion", p))
    for prot in (DetuningProtocol.compression(10, 20, 0.1), DetuningProtocol.expansion(20, 10, 0.5)):
        a = run_stroke(init, prot, p).final.moments
        step = prot.tau / 2000 if prot.tau * 22 / 0.01 <= 2000 else None
        b = run_stroke(init, prot, p, step=(step or prot.tau / np.ceil(prot.tau * 22 / 0.01)) / 2).final.moments
        assert np.abs(a - b).max() < 1e-8 * np.abs(b).max()


def test_nonadiabatic_excitation_matches_husimi():
    # (n_f + 1/2) / (n_0 + 1/2) = Q* for a closed oscillator
    p = reference_params().replace(G=0.0)
    prot = DetuningProtocol.compression(10, 20, 0.1)
    tr = run_stroke(GaussianState.thermal(0.4, 0), prot, p, dissipative=False)
    assert (tr.final.n_a + 0.5) / 0.9 == pytest.approx(1.1830244029, rel=1e-9)


@pytest.mark.parametrize("tau", [0.0515, 0.08, 0.3, 2.0])
def test_cd_driving_preserves_occupation(tau):
    p = reference_params().replace(G=0.0)
    for prot in (DetuningProtocol.compression(10, 20, tau, sta=True),
                 DetuningProtocol.expansion(20, 10, tau, sta=True)):
        tr = run_stroke(GaussianState.thermal(0.7, 3.0), prot, p, dissipative=False)
        assert tr.final.n_a == pytest.approx(0.7, abs=1e-6)


def test_initial_states():
    p = reference_params(0.4)
    s = stroke_initial_state("compression", p.replace(G=0.0), delta_l=10)
    assert s.moments[0, 1] == pytest.approx(p.n_c) and s.moments[2, 3] == pytest.approx(p.n_bar)
    assert np.abs(s.moments - GaussianState.thermal(p.n_c, p.n_bar).moments).max() < 1e-9
    assert stroke_initial_state("expansion", p).n_a == pytest.approx(4.3230986833, rel=1e-9)
    hot = stroke_initial_state("expansion", p, phase_average=True)
    assert hot.moments[0, 0] == 0 and hot.n_a == pytest.approx(4.3230986833, rel=1e-9)
    assert stroke_initial_state("compression", p, cold_state="thermal").n_a == p.n_c
    with pytest.raises(UsageError):
        stroke_initial_state("compression", p)
    with pytest.raises(ValidationError):
        stroke_initial_state("isochoric", p)


def test_coupled_cold_state_against_sylvester():
    p = reference_params(0.3)
    cold = p.replace(lam=0.0, delta=10.0)
    A, D = drift_matrix(cold, CUSTOM), diffusion_matrix(cold, p.n_c)
    S = solve_sylvester(A, A.T, -D)
    s = stroke_initial_state("compression", p, delta_l=10.0)
    assert s.n_a == pytest.approx(S[0, 1].real, rel=1e-10)


def test_bath_policies():
    p = reference_params(0.2)
    assert bath_occupation("compression", p) == pytest.approx(1.3594054315, rel=1e-9)
    assert bath_occupation("expansion", p) == p.n_c
    assert bath_occupation("compression", p, "cold-always") == p.n_c
    with pytest.raises(ValidationError):
        bath_occupation("compression", p, "hot-always")


def test_extra_heat_vanishes_without_coupling():
    p = reference_params(0.001).replace(G=0.0)
    prot = DetuningProtocol.compression(10, 20, 0.1)
    assert extra_heat("compression", prot, p, cold_state="thermal") == 0.0


def test_extra_heat_is_absorbed():
    p = reference_params(0.4)
    init_e = phase_averaged(stroke_initial_state("expansion", p))
    ec = extra_heat("compression", DetuningProtocol.compression(10, 20, 0.1), p, cold_state="thermal")
    ee = extra_heat("expansion", DetuningProtocol.expansion(20, 10, 0.1), p, initial=init_e)
    assert ec + ee > 0


def test_extra_heat_small_tau_limit():
    p = reference_params(0.2)
    vals = [extra_heat("compression", DetuningProtocol.compression(10, 20, tau), p, cold_state="thermal")
            for tau in (1e-1, 1e-2, 1e-3)]
    assert abs(vals[2]) < abs(vals[1]) < abs(vals[0])
    assert abs(vals[2]) < 1e-2 * abs(vals[0])


def test_bath_policy_difference_is_small():
    p = reference_params(0.2)
    prot = DetuningProtocol.compression(10, 20, 0.1)
    a = extra_heat("compression", prot, p, "appendix-c", cold_state="thermal")
    b = extra_heat("compression", prot, p, "cold-always", cold_state="thermal")
    assert abs(a - b) < 0.01 * abs(a)


def test_twin_profile_starts_at_zero():
    p = reference_params(0.2)
    t, de = extra_heat_profile("compression", DetuningProtocol.compression(10, 20, 0.1), p, cold_state="thermal")
    assert de[0] == 0 and len(t) == len(de)
    with pytest.raises(UsageError):
        extra_heat_profile("expansion", DetuningProtocol.compression(10, 20, 0.1), p)


def test_cd_flag_changes_twins():
    p = reference_params(0.2)
    prot = DetuningProtocol.compression(10, 20, 0.1)
    a = extra_heat("compression", prot, p, cold_state="thermal")
    b = extra_heat("compression", prot, p, cold_state="thermal", include_cd=True)
    assert a != b and b > 0


def test_stroke_diffusion_keeps_pair_structure():
    p = reference_params(0.2)
    prot = DetuningProtocol.compression(10, 20, 0.1)
    D = stroke_diffusion(p, prot, 0.5)(np.linspace(0, 0.1, 9))
    assert np.allclose(D[:, 0, 0], D[:, 1, 1]) and np.allclose(D[:, 2, 2], 0)
    A = stroke_drift(p, prot, dissipative=False)(np.array([0.05]))
    assert A[0, 0, 0].real == 0


def _lab_frame_oscillator(prot, n0, cd):
    """Covariance of (x, p) for H = p^2/2 + Delta^2 x^2/2, optionally plus the CD squeeze."""
    from scipy.integrate import solve_ivp
    from omotto.protocol import ramp_derivatives, ramp_detuning

    def rhs(t, y):
        xx, pp, xp = y
        d = float(ramp_detuning(prot, np.array([t]))[0])
        g = -float(ramp_derivatives(prot, np.array([t]))[0][0]) / (2 * d) if cd else 0.0
        return [2 * xp + 2 * g * xx, -2 * d**2 * xp - 2 * g * pp, pp - d**2 * xx]

    d0 = prot.delta_i
    sol = solve_ivp(rhs, (0, prot.tau), [(n0 + 0.5) / d0, (n0 + 0.5) * d0, 0.0],
                    method="DOP853", rtol=1e-12, atol=1e-12)
    xx, pp, xp = sol.y[:, -1]
    d = prot.delta_f
    return (pp + d**2 * xx) / (2 * d) - 0.5, abs(d**2 * xx - pp + 2j * d * xp) / (2 * d)


@pytest.mark.parametrize("sta", [False, True])
def test_stroke_frame_matches_lab_frame_oscillator(sta):
    p = reference_params().replace(G=0.0)
    for prot in (DetuningProtocol.compression(10, 20, 0.08, sta=sta),
                 DetuningProtocol.expansion(20, 10, 0.2, sta=sta)):
        tr = run_stroke(GaussianState.thermal(0.4, 1.0), prot, p, dissipative=False)
        n_lab, sq_lab = _lab_frame_oscillator(prot, 0.4, sta)
        assert tr.final.n_a == pytest.approx(n_lab, rel=1e-7)
        assert abs(tr.final.moments[0, 0]) == pytest.approx(sq_lab, rel=1e-6, abs=1e-9)


def test_cd_moments_match_finite_difference_derivative():
    p = reference_params(0.3)
    prot = DetuningProtocol.compression(10, 20, 0.1, sta=True)
    tr = run_stroke(GaussianState.thermal(0.01, 100.0), prot, p)
    drift, diff = stroke_drift(p, prot), stroke_diffusion(p, prot, bath_occupation("compression", p))
    h = tr.times[1] - tr.times[0]
    for i in (len(tr) // 5, len(tr) // 2, 4 * len(tr) // 5):
        fd = (tr.moments[i + 1] - tr.moments[i - 1]) / (2 * h)
        t = tr.times[i : i + 1]
        A, D = drift(t)[0], diff(t)[0]
        S = tr.moments[i]
        exact = A @ S + (A @ S).T + D
        assert np.abs(fd - exact).max() < 1e-5 * np.abs(exact).max()


def test_stroke_dissipator_effect_scales_with_kappa_tau():
    # relative change of the extra heat is ~0.4 kappa*tau: 4% at kappa*tau = 0.1, < 1% below 0.025
    prot = DetuningProtocol.compression(10, 20, 0.1)
    rel = []
    for kappa in (1.0, 0.5, 0.2):
        p = reference_params(0.05).replace(kappa=kappa)
        on = extra_heat("compression", prot, p, cold_state="thermal")
        off = extra_heat("compression", prot, p, cold_state="thermal", dissipative=False)
        rel.append(abs(on - off) / abs(on))
    assert rel[0] < 0.05 and rel[2] < 0.01
    assert rel[0] / rel[1] == pytest.approx(2, rel=0.05)
