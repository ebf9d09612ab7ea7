"""Command-line front-end.

Usage: ``omotto COMMAND [--config FILE] [--out DIR] [overrides...]``.

Configuration files are flat ``key = value`` text with ``#`` comments; a
JSON sidecar written by a previous run is accepted as well and replays that
run. Every command writes ``<name>.csv`` and ``<name>.json`` into ``--out``.
"""

import argparse
import csv
import io
import json
import os
import platform
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np
import scipy

from . import __version__
from . import figures
from . import protocol as _prot
from .dynamics import BATH_POLICIES
from .errors import OttoError, StabilityError, ValidationError
from .flux import flux_ledger, utilization_efficiency
from .model import make_params, stability_bound
from .sde import EnsembleConfig, moment_reference, simulate_ensemble
from .steady import analytic_correlations, hot_steady
from .thermo import CycleConfig, find_tau_cri, find_tau_min, map_cycles, run_cycle

EXIT_CODES = {"validation": 2, "stability": 3, "trap-inversion": 4, "convergence": 5, "numeric": 6}
COMMANDS = ("steady", "flux", "qstar", "cycle", "sde-check", "tau-min", "tau-cri", "sweep", "fig", "replay")


class ParseError(ValidationError):
    def __init__(self, message, key=None, line=None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.key = key
        self.line = line


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration; defaults are the reference parameter set."""

    kappa: float = 1.0
    gamma: float = 0.01
    G: float = 1.0
    lam: float = 0.2
    n_c: float = 0.01
    n_bar: float = 100.0
    delta_h: float = 20.0
    delta_l: float = 10.0
    omega_m: Optional[float] = None
    tau: float = 0.1
    sta: bool = False
    bath_policy: str = "appendix-c"
    include_om_in_strokes: bool = False
    stroke_dissipation: bool = True
    lambda_min: float = 0.0
    lambda_max: float = 0.5
    lambda_points: int = 11
    stroke: str = "compression"
    ntraj: int = 10_000
    step: Optional[float] = None
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        self.params()
        if not 0 < self.delta_l < self.delta_h:
            raise ValidationError("need 0 < delta_l < delta_h")
        if not self.tau > 0:
            raise ValidationError("tau must be positive")
        if self.bath_policy not in BATH_POLICIES:
            raise ValidationError(f"bath_policy must be one of {BATH_POLICIES}")
        if self.lambda_points < 1 or self.lambda_min > self.lambda_max or self.lambda_min < 0:
            raise ValidationError("lambda sweep range must be non-empty and ordered")
        if self.jobs < 1:
            raise ValidationError("jobs must be >= 1")

    def params(self, lam=None):
        om = self.delta_h if self.omega_m is None else self.omega_m
        return make_params(kappa=self.kappa, gamma=self.gamma, G=self.G,
                           lam=self.lam if lam is None else lam, omega_m=om,
                           delta=self.delta_h, n_c=self.n_c, n_bar=self.n_bar)

    def cycle(self, lam=None, tau=None):
        return CycleConfig(self.params(lam), self.delta_l, self.delta_h,
                           self.tau if tau is None else tau, None, self.bath_policy, self.sta,
                           self.include_om_in_strokes, self.stroke_dissipation, step=self.step)

    def lambdas(self):
        return np.linspace(self.lambda_min, self.lambda_max, self.lambda_points)


_FIELDS = {f.name: f for f in fields(RunConfig)}
_ALIASES = {"lambda": "lam"}


def _convert(key, text, line=None):
    kind = _FIELDS[key].type
    text = text.strip()
    try:
        if kind in (float, "float"):
            return float(text)
        if kind in (int, "int"):
            return int(text)
        if kind in (bool, "bool"):
            low = text.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(text)
        if kind in (str, "str"):
            return text
        # Optional[float]
        return None if text.lower() in ("", "none") else float(text)
    except ValueError:
        raise ParseError(f"bad value {text!r} for key {key!r}", key, line) from None


def _canonical(key, line=None):
    key = _ALIASES.get(key.strip().replace("-", "_"), key.strip().replace("-", "_"))
    if key not in _FIELDS:
        raise ParseError(f"unknown key {key!r}", key, line)
    return key


def parse_text(text):
    """Parse flat ``key = value`` text into a dict of typed values."""
    values, seen = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ParseError(f"expected 'key = value', got {body!r}", None, lineno)
        k, v = body.split("=", 1)
        key = _canonical(k, lineno)
        if key in seen:
            raise ParseError(f"duplicate key {key!r} (first on line {seen[key]})", key, lineno)
        seen[key] = lineno
        values[key] = _convert(key, v, lineno)
    return values


def _load_file(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".json"):
        data = json.loads(text)
        cfg = data.get("config", data)
        out = {}
        for k, v in cfg.items():
            key = _canonical(k)
            out[key] = v
        return out, data
    return parse_text(text), None


def parse_config(path=None, overrides=None):
    """Build a RunConfig from an optional file and flag overrides (flags win)."""
    values = {}
    if path:
        values, _ = _load_file(path)
    for k, v in (overrides or {}).items():
        if v is not None:
            values[_canonical(k)] = v
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ValidationError(str(exc)) from None


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_atomic(path, data):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _versions():
    return {"omotto": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _check_cycle_lambda(cfg, lam):
    bound = stability_bound(cfg.params(lam))
    if lam >= bound:
        raise StabilityError(f"lambda={lam:g} exceeds the stability bound {bound:.6g}")


def cmd_steady(cfg):
    p = cfg.params()
    a = analytic_correlations(p)
    s = hot_steady(p)
    return "steady", ["lambda", "n_a", "n_b", "ab_cross_re", "ab_cross_im", "b_squared_re",
                      "b_squared_im", "n_a_lyapunov"], [
        (p.lam, a.n_a, a.n_b, a.ab_cross.real, a.ab_cross.imag, a.b_squared.real,
         a.b_squared.imag, s.n_a)]


def cmd_flux(cfg):
    p = cfg.params()
    led = flux_ledger(analytic_correlations(p), p)
    return "flux", ["lambda", "q_b_to_a", "q_pd", "q_up_a", "q_down_a", "q_up_b", "q_down_b", "xi"], [
        (p.lam, led.q_b_to_a, led.q_pd, led.q_up_a, led.q_down_a, led.q_up_b, led.q_down_b,
         utilization_efficiency(led))]


def cmd_qstar(cfg):
    prot = _prot.DetuningProtocol.compression(cfg.delta_l, cfg.delta_h, cfg.tau)
    return "qstar", ["tau", "delta_i", "delta_f", "q_star"], [
        (cfg.tau, cfg.delta_l, cfg.delta_h, _prot.adiabatic_parameter(prot))]


def cmd_cycle(cfg):
    lams = cfg.lambdas()
    for lam in (cfg.lam, *lams):
        _check_cycle_lambda(cfg, lam)
    reports = map_cycles(lambda c: run_cycle(c, numerical=False), [cfg.cycle(lam) for lam in lams], cfg.jobs)
    rows = [(lam, r.eta_th, r.eta_th_prime, r.eta_sta, r.eta_sta_prime) for lam, r in zip(lams, reports)]
    return "cycle", ["lambda", "eta_th", "eta_th_prime", "eta_sta", "eta_sta_prime"], rows


def cmd_sde_check(cfg):
    p = cfg.params()
    if cfg.stroke == "compression":
        prot, kw = _prot.DetuningProtocol.compression(cfg.delta_l, cfg.delta_h, cfg.tau), {}
    elif cfg.stroke == "expansion":
        prot, kw = _prot.DetuningProtocol.expansion(cfg.delta_h, cfg.delta_l, cfg.tau), {}
    else:
        prot, kw = None, {"span": cfg.tau}
    ens = EnsembleConfig(p, cfg.stroke, prot, cfg.bath_policy, cfg.ntraj, cfg.step, cfg.seed, **kw)
    stats = simulate_ensemble(ens, jobs=cfg.jobs)
    ref = moment_reference(ens)
    e_ref = np.interp(stats.times, ref.times, ref.energy)
    z = (stats.energy - e_ref) / np.where(stats.energy_se > 0, stats.energy_se, np.inf)
    rows = [(t, e, se, er, zz) for t, e, se, er, zz in zip(stats.times, stats.energy, stats.energy_se, e_ref, z)]
    return "sde_check", ["time", "energy_sde", "energy_se", "energy_ode", "z_score"], rows


def cmd_tau_min(cfg):
    return "tau_min", ["delta_i", "delta_f", "tau_min"], [
        (cfg.delta_l, cfg.delta_h, find_tau_min(cfg.delta_l, cfg.delta_h))]


def cmd_tau_cri(cfg):
    _check_cycle_lambda(cfg, cfg.lam)
    c = cfg.cycle()
    return "tau_cri", ["lambda", "tau_min", "tau_cri", "tau_cri_prime"], [
        (cfg.lam, find_tau_min(cfg.delta_l, cfg.delta_h), find_tau_cri(c), find_tau_cri(c, with_om=True))]


def cmd_sweep(cfg):
    p0 = cfg.params()
    rows = []
    for lam in cfg.lambdas():
        _check_cycle_lambda(cfg, lam)
        rows.append((lam, *figures.utilization_row(p0.replace(lam=lam))))
    return "fig1b", ["lambda", "xi", "n_h"], rows


def cmd_fig(cfg, name):
    if name not in figures.RECIPES:
        raise ValidationError(f"unknown figure {name!r}; choose from {', '.join(figures.FIGURES)}")
    base = cfg.cycle()
    recipe = figures.RECIPES[name]
    kw = {"jobs": cfg.jobs} if "jobs" in recipe.__code__.co_varnames else {}
    if name == "5a":
        header, rows = recipe()
    else:
        header, rows = recipe(base, **kw)
    return f"fig{name}", header, rows


HANDLERS = {"steady": cmd_steady, "flux": cmd_flux, "qstar": cmd_qstar, "cycle": cmd_cycle,
            "sde-check": cmd_sde_check, "tau-min": cmd_tau_min, "tau-cri": cmd_tau_cri,
            "sweep": cmd_sweep}


def build_parser():
    ap = argparse.ArgumentParser(prog="omotto", description="Optomechanical Otto engine calculations.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("figure", nargs="?",
                    help="figure name for 'fig'; sidecar path for 'replay'")
    ap.add_argument("--config", help="key = value file or JSON sidecar")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--jobs", type=int)
    ap.add_argument("--lambda", dest="lam", type=float)
    ap.add_argument("--tau", type=float)
    ap.add_argument("--delta-h", type=float)
    ap.add_argument("--delta-l", type=float)
    ap.add_argument("--ntraj", type=int)
    ap.add_argument("--step", type=float)
    ap.add_argument("--bath-policy", choices=BATH_POLICIES)
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override any configuration key")
    return ap


def run(argv=None):
    """Run the CLI; returns the exit status."""
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        overrides = {k: getattr(args, k) for k in
                     ("seed", "jobs", "lam", "tau", "delta_h", "delta_l", "ntraj", "step", "bath_policy")}
        for item in args.set:
            if "=" not in item:
                raise ParseError(f"--set expects KEY=VALUE, got {item!r}")
            k, v = item.split("=", 1)
            overrides[_canonical(k)] = _convert(_canonical(k), v)
        if args.command == "replay":
            if not args.figure:
                raise ValidationError("the 'replay' command needs a sidecar path")
            args.config = args.figure
            with open(args.config, encoding="utf-8") as fh:
                recorded = json.load(fh)["command"].split()
            args.command = recorded[0]
            args.figure = recorded[1] if len(recorded) > 1 else None
        cfg = parse_config(args.config, overrides)
        if args.command == "fig":
            if not args.figure:
                raise ValidationError("the 'fig' command needs a figure name")
            name, header, rows = cmd_fig(cfg, args.figure)
        else:
            name, header, rows = HANDLERS[args.command](cfg)
        write_atomic(os.path.join(args.out, name + ".csv"), csv_text(header, rows))
        sidecar = {"command": args.command if args.command != "fig" else f"fig {args.figure}",
                   "config": asdict(cfg), "seed": cfg.seed, "versions": _versions(),
                   "wall_time_s": time.perf_counter() - t0}
        write_atomic(os.path.join(args.out, name + ".json"), json.dumps(sidecar, indent=2) + "\n")
    except OttoError as exc:
        print(json.dumps({"error": exc.category, "message": str(exc)}), file=sys.stderr)
        return EXIT_CODES[exc.category]
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(json.dumps({"error": "validation", "message": str(exc)}), file=sys.stderr)
        return EXIT_CODES["validation"]
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
