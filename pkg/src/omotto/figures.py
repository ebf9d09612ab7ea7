"""Dataset recipes for the standard figures.

Each recipe returns ``(header, rows)``; ``rows`` is a list of tuples of
floats in header order. Parameters not fixed by a recipe are taken from the
``base`` cycle (reference parameters by default).
"""

import numpy as np

from . import protocol as _prot
from .flux import flux_ledger, utilization_efficiency
from .model import reference_params, stability_bound
from .steady import analytic_correlations
from .thermo import CycleConfig, find_tau_cri, find_tau_min, map_cycles, run_cycle

FIGURES = ("1b", "3a", "3b", "4a", "4b", "5a", "5b", "6a", "6b")
FIG3_TAUS = (0.1, 0.15, 0.5)
EFF_COLUMNS = ["eta_otto", "eta_th", "eta_th_prime", "eta_sta", "eta_sta_prime"]


def _effs(report):
    return (report.eta_otto, report.eta_th, report.eta_th_prime, report.eta_sta, report.eta_sta_prime)


def utilization_row(p):
    """(xi, n_h) of the resonant hot configuration ``p``."""
    corr = analytic_correlations(p)
    return utilization_efficiency(flux_ledger(corr, p)), corr.n_a


def fig1b(base=None, points=50, frac=0.99):
    p0 = (base or CycleConfig()).hot_params
    lams = np.linspace(0.0, frac * stability_bound(p0), points)
    rows = [(lam, *utilization_row(p0.replace(lam=lam))) for lam in lams]
    return ["lambda", "xi", "n_h"], rows


def _lambda_cycles(base, lams, **kw):
    return [CycleConfig(base.params, base.delta_l, base.delta_h, kw.get("tau", base.tau), lam,
                        base.bath_policy, base.sta, base.include_om_in_strokes,
                        base.stroke_dissipation, base.cold_state, base.phase_average, base.step)
            for lam in lams]


def fig3a(base=None, lams=None, taus=FIG3_TAUS, jobs=1):
    base = base or CycleConfig()
    lams = np.linspace(0.0, 0.5, 11) if lams is None else lams
    cycles = [c for tau in taus for c in _lambda_cycles(base, lams, tau=tau)]
    reports = map_cycles(run_cycle, cycles, jobs)
    rows = [(c.hot_params.lam, c.tau, r.eta_th, r.eta_num) for c, r in zip(cycles, reports)]
    return ["lambda", "tau", "eta_th", "eta_num"], rows


def fig3b(base=None, lams=None, taus=FIG3_TAUS):
    base = base or CycleConfig()
    lams = np.linspace(0.0, 0.5, 11) if lams is None else lams
    rows = []
    for tau in taus:
        q = _prot.adiabatic_parameter(_prot.DetuningProtocol.compression(base.delta_l, base.delta_h, tau))
        rows.extend((lam, tau, q) for lam in lams)
    return ["lambda", "tau", "q_star"], rows


def fig4a(base=None, delta_hs=None, lam=0.4, jobs=1):
    base = base or CycleConfig()
    delta_hs = np.linspace(10.0, 40.0, 16) if delta_hs is None else delta_hs
    cycles = []
    for dh in delta_hs:
        p = base.params.replace(omega_m=dh, delta=dh, lam=lam)
        cycles.append(CycleConfig(p, dh / 2, dh, base.tau, None, base.bath_policy,
                                  cold_state=base.cold_state, phase_average=base.phase_average))
    reports = map_cycles(lambda c: run_cycle(c, numerical=False), cycles, jobs)
    return ["delta_h"] + EFF_COLUMNS, [(c.delta_h, *_effs(r)) for c, r in zip(cycles, reports)]


def fig4b(base=None, lams=None, jobs=1):
    base = base or CycleConfig()
    lams = np.linspace(0.0, 0.5, 11) if lams is None else lams
    cycles = _lambda_cycles(base, lams)
    reports = map_cycles(lambda c: run_cycle(c, numerical=False), cycles, jobs)
    return ["lambda"] + EFF_COLUMNS, [(c.hot_params.lam, *_effs(r)) for c, r in zip(cycles, reports)]


def fig5a(delta_ls=None, delta_hs=None):
    delta_ls = np.linspace(2.0, 20.0, 10) if delta_ls is None else delta_ls
    delta_hs = np.linspace(20.0, 40.0, 11) if delta_hs is None else delta_hs
    rows = [(dl, dh, find_tau_min(dl, dh)) for dl in delta_ls for dh in delta_hs if dl < dh]
    return ["delta_l", "delta_h", "tau_min"], rows


def fig5b(base=None, lams=None, offset=1e-6, jobs=1):
    """Efficiencies at tau = tau_min (1 + offset); the STA energy diverges at tau_min itself."""
    base = base or CycleConfig()
    lams = np.linspace(0.0, 0.5, 11) if lams is None else lams
    tau = find_tau_min(base.delta_l, base.delta_h) * (1 + offset)
    cycles = _lambda_cycles(base, lams, tau=tau)
    reports = map_cycles(lambda c: run_cycle(c, numerical=False), cycles, jobs)
    rows = [(c.hot_params.lam, tau, *_effs(r)) for c, r in zip(cycles, reports)]
    return ["lambda", "tau_min"] + EFF_COLUMNS, rows


def fig6a(base=None, lams=None, jobs=1):
    base = base or CycleConfig()
    lams = np.linspace(0.0, 0.5, 11) if lams is None else lams
    tmin = find_tau_min(base.delta_l, base.delta_h)
    cycles = _lambda_cycles(base, lams)
    res = map_cycles(lambda c: (find_tau_cri(c), find_tau_cri(c, with_om=True)), cycles, jobs)
    rows = [(c.hot_params.lam, tmin, a, b) for c, (a, b) in zip(cycles, res)]
    return ["lambda", "tau_min", "tau_cri", "tau_cri_prime"], rows


def fig6b(base=None, taus=None, lam=0.4, jobs=1):
    base = base or CycleConfig()
    tmin = find_tau_min(base.delta_l, base.delta_h)
    taus = np.geomspace(tmin * (1 + 1e-4), 1.0, 30) if taus is None else taus
    cycles = _lambda_cycles(base, [lam] * len(taus))
    cycles = [c.with_tau(t) for c, t in zip(cycles, taus)]
    reports = map_cycles(lambda c: run_cycle(c, numerical=False), cycles, jobs)
    return ["tau"] + EFF_COLUMNS, [(c.tau, *_effs(r)) for c, r in zip(cycles, reports)]


RECIPES = {"1b": fig1b, "3a": fig3a, "3b": fig3b, "4a": fig4a, "4b": fig4b,
           "5a": fig5a, "5b": fig5b, "6a": fig6a, "6b": fig6b}


def reference_cycle(lam=0.2, tau=0.1):
    return CycleConfig(reference_params(lam), 10.0, 20.0, tau)
