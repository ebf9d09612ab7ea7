import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from omotto import (CycleConfig, RefrigeratorError, TrapInversionError, ValidationError,
                    char_function, eta_otto, eta_sta, eta_sta_prime, eta_th, eta_th_prime,
                    find_tau_cri, find_tau_min, hot_steady, mean_work_heat, reference_params,
                    run_cycle)
from omotto.dynamics import GaussianState
from omotto.errors import ConvergenceError, RootNotFoundError
from omotto.thermo import extra_heat_total, relax_isochoric, sta_energy_total


def otto_closed_form(dl, dh, nc, nh, q):
    # energy bookkeeping of the four strokes with N = n + 1/2
    Nc, Nh = nc + 0.5, nh + 0.5
    w = dh * q * Nc - dl * Nc + dl * q * Nh - dh * Nh
    return w, dh * (Nh - q * Nc)


@settings(max_examples=100, deadline=None)
@given(dl=st.floats(1, 30), ratio=st.floats(1.05, 4), nc=st.floats(0, 3), nh=st.floats(0, 50),
       q=st.floats(1, 3))
def test_char_function_normalised(dl, ratio, nc, nh, q):
    assert abs(char_function(0, 0, dl, dl * ratio, nc, nh, q) - 1) < 1e-12


def test_char_function_bounded_on_grid():
    u = np.linspace(-0.1, 0.1, 21)
    vals = [abs(char_function(a, b, 10, 20, 0.01, 1.3594, 1.183)) for a in u for b in u]
    assert max(vals) <= 1 + 1e-12


def test_char_function_degenerate_cycle():
    # no ramp and equal baths: the work is identically zero
    for u in (0.01, 0.05, 0.1):
        assert char_function(u, 0, 15, 15, 0.5, 0.5, 1.0) == pytest.approx(1, abs=1e-12)


@pytest.mark.parametrize("q", [1.0, 1.05, 1.183, 1.25, 1.6])
@pytest.mark.parametrize("nh", [0.5, 1.3594, 4.323, 20.0])
def test_tpm_means_match_bookkeeping(q, nh):
    w, h = mean_work_heat(10, 20, 0.01, nh, q)
    wc, hc = otto_closed_form(10, 20, 0.01, nh, q)
    assert w == pytest.approx(wc, rel=1e-7, abs=1e-9)
    assert h == pytest.approx(hc, rel=1e-7)
    if hc > 0:
        assert -w / h == pytest.approx(eta_th(10, 20, 0.01, nh, q), rel=1e-6)


def test_adiabatic_limit_values():
    w, q = mean_work_heat(10, 20, 0.01, 1.0, 1.0)
    assert -w / q == pytest.approx(0.5, rel=1e-9)
    assert q == pytest.approx(20 * (1.0 - 0.01), rel=1e-9)


def test_eta_th_examples():
    assert eta_th(10, 20, 0.01, 1.0, 1.0) == pytest.approx(0.5)
    assert eta_th(10, 20, 0.01, 1.0, 1.25) == pytest.approx(0.2087, abs=5e-5)
    qs = np.linspace(1, 2.9, 40)
    vals = [eta_th(10, 20, 0.01, 1.0, q) for q in qs]
    assert np.all(np.diff(vals) < 0) and vals[-1] <= 0
    with pytest.raises(RefrigeratorError):
        eta_th(10, 20, 0.01, 1.0, 3.0)


def test_eta_otto():
    assert eta_otto(10, 20) == 0.5
    assert eta_otto(20, 20) == 0
    assert eta_otto(10, 40) == 0.75
    with pytest.raises(ValidationError):
        eta_otto(30, 20)


def test_cycle_config_validation():
    with pytest.raises(ValidationError):
        CycleConfig(reference_params(0.2, delta_h=25.0), 10, 20, 0.1)
    with pytest.raises(ValidationError):
        CycleConfig.reference(0.2).__class__(reference_params(0.2), 20, 10, 0.1)
    assert CycleConfig.reference(0.3).hot_params.lam == 0.3


def test_sta_efficiency_limits():
    slow = CycleConfig.reference(0.4, tau=50.0)
    assert eta_sta(slow) == pytest.approx(0.5, abs=1e-4)
    fast = CycleConfig.reference(0.4, tau=find_tau_min(10, 20) * (1 + 1e-6))
    assert eta_sta(fast) < run_cycle(fast, numerical=False).eta_th
    with pytest.raises(TrapInversionError):
        eta_sta(CycleConfig.reference(0.4, tau=0.05))


def test_primed_efficiencies():
    c = CycleConfig.reference(0.4)
    extra = extra_heat_total(c)
    assert extra > 0
    assert eta_sta_prime(c, extra) < eta_sta(c)
    assert eta_th_prime(c, extra) < run_cycle(c, numerical=False).eta_th
    assert eta_sta_prime(c, 0.0) == pytest.approx(eta_sta(c), rel=1e-15)


def test_decoupled_extra_heat_is_zero():
    c = CycleConfig(reference_params(0.001).replace(G=0.0), 10, 20, 0.1)
    assert extra_heat_total(c) == 0.0


def test_sta_cost_shrinks_with_detuning():
    reports = [run_cycle(CycleConfig.reference(0.4, delta_h=dh), numerical=False)
               for dh in (22.0, 30.0, 40.0, 60.0, 80.0)]
    otto_gap = [r.eta_otto - r.eta_sta for r in reports]
    assert np.all(np.diff(otto_gap) < 0)
    # the extra-heat gap is flat up to delta_h ~ 30 and decreases beyond
    prime_gap = [r.eta_sta - r.eta_sta_prime for r in reports]
    assert np.all(np.diff(prime_gap[1:]) < 0) and min(prime_gap) > 0


def test_efficiencies_below_otto():
    for lam in (0.1, 0.3, 0.45):
        for tau in (0.06, 0.1, 0.3, 1.0):
            r = run_cycle(CycleConfig.reference(lam, tau), numerical=False)
            for eta in (r.eta_th, r.eta_th_prime, r.eta_sta, r.eta_sta_prime):
                assert eta <= r.eta_otto + 1e-12


def test_numerical_cycle_close_to_analytic():
    r = run_cycle(CycleConfig.reference(0.2, 0.1))
    assert r.eta_num == pytest.approx(r.eta_th, rel=0.05)
    assert r.w_out == -r.mean_work > 0 and not r.stalled
    assert np.isfinite(r.stroke_dissipation_work)


def test_sta_cycle_reaches_otto_efficiency():
    for tau in (0.0515, 0.1, 0.7):
        r = run_cycle(CycleConfig.reference(0.3, tau, sta=True, stroke_dissipation=False))
        assert r.eta_num == pytest.approx(0.5, abs=1e-6)


def test_stalled_engine_flag():
    p = reference_params(0.0).replace(G=0.01)
    r = run_cycle(CycleConfig(p, 10, 20, 0.1), numerical=False)
    assert r.mean_work >= 0 and r.stalled


def test_relaxation_reaches_lyapunov_state():
    p = reference_params(0.3)
    s = relax_isochoric(p, GaussianState.thermal(p.n_c, p.n_bar))
    assert s.n_a == pytest.approx(hot_steady(p).n_a, rel=1e-6)
    with pytest.raises(ConvergenceError):
        relax_isochoric(p, GaussianState.thermal(p.n_c, p.n_bar), max_time=1.0)


def test_tau_min_values():
    s = np.linspace(0, 1, 100_001)
    delta = 10 + 10 * s**3 * (10 - 15 * s + 6 * s**2)
    oracle = np.max(10 * 30 * s**2 * (1 - s) ** 2 / (2 * delta**2))
    assert find_tau_min(10, 20) == pytest.approx(oracle, rel=1e-8)
    assert find_tau_min(20, 10) == pytest.approx(oracle, rel=1e-8)


def test_tau_cri_brackets_sign_change():
    c = CycleConfig.reference(0.2)
    t = find_tau_cri(c)
    lo = run_cycle(c.with_tau(t * (1 - 1e-3)), numerical=False)
    hi = run_cycle(c.with_tau(t * (1 + 1e-3)), numerical=False)
    assert lo.eta_sta < lo.eta_th and hi.eta_sta > hi.eta_th
    with pytest.raises(RootNotFoundError):
        find_tau_cri(c, tau_hi=0.0511)


def test_sta_energy_total_reference():
    c = CycleConfig.reference(0.2, 0.1)
    assert sta_energy_total(c) > 0
