"""Command-line front end: single solves, phase-diagram scans, spectrum
export and exact-diagonalization consistency reports.

Output contract: JSON for `solve` and `oracle`, CSV for `scan` and
`spectrum`.  All floats are serialized in shortest round-trip decimal so
identical configurations produce byte-identical files.  Exit codes:
0 ok, 1 configuration error, 2 infeasible point, 3 non-convergence,
4 oracle-check failure.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .errors import (
    PairBosonError, ConfigError, InfeasiblePoint, UnstableMode,
    ContinuationDiverged, BracketFailure, QuadratureFailure,
    StationarityViolated, TailNotConverged, InequalityViolated,
    DimensionExceeded, ModelError,
)
from .model import (
    Model, gaussian_profile, power_profile, delta_profile,
)
from .pressure import ThermoPoint
from .quadrature import QuadratureConfig
from .solver import eta_continuation, classify_phase, excitation_spectrum
from . import oracle as _oracle

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_NO_CONVERGENCE = 3
EXIT_ORACLE = 4

_INFEASIBLE_ERRORS = (InfeasiblePoint, UnstableMode)
_CONVERGENCE_ERRORS = (ContinuationDiverged, BracketFailure,
                       QuadratureFailure, StationarityViolated,
                       TailNotConverged)

# Every key accepted in a config file; anything else is rejected
# (fail-closed).  Command-line flags override file values.
_DEFAULTS = {
    "beta": "1.0",
    "mu": "-0.5",
    "mu_range": None,
    "u": "0.5",
    "v": "1.0",
    "mass": "0.5",
    "dim": "3",
    "profile": "gaussian:1.0",
    "eta0": "0.1",
    "eta_floor": "1e-6",
    "eta_factor": "0.5",
    "tol": "1e-10",
    "out": None,
    "format": None,
    "k_max": "5.0",
    "k_count": "101",
    "n_max": "8",
}


def _fmt(x) -> str:
    """Shortest decimal that round-trips the float."""
    return repr(float(x))


def _parse_config_file(path: str) -> dict:
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            col = len(raw) - len(raw.lstrip()) + 1
            raise ConfigError(
                f"{path}:{lineno}:{col}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip().replace("-", "_")
        val = val.strip()
        if key not in _DEFAULTS:
            col = raw.index(key.replace("_", "-")) + 1 if key.replace(
                "_", "-") in raw else raw.index(key) + 1 if key in raw else 1
            raise ConfigError(f"{path}:{lineno}:{col}: unknown key '{key}'")
        if not val:
            raise ConfigError(f"{path}:{lineno}: empty value for '{key}'")
        values[key] = val
    return values


def _merge_config(args: argparse.Namespace) -> dict:
    cfg = dict(_DEFAULTS)
    if args.config:
        cfg.update(_parse_config_file(args.config))
    for key in _DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    return cfg


def _parse_float(cfg, key) -> float:
    try:
        return float(cfg[key])
    except (TypeError, ValueError):
        raise ConfigError(f"invalid number for {key}: {cfg[key]!r}")


def _parse_int(cfg, key) -> int:
    try:
        return int(cfg[key])
    except (TypeError, ValueError):
        raise ConfigError(f"invalid integer for {key}: {cfg[key]!r}")


def _parse_profile(text: str, dim: int):
    parts = text.split(":")
    kind = parts[0].strip().lower()
    try:
        if kind == "gaussian":
            if len(parts) != 2:
                raise ConfigError("profile gaussian takes one parameter: "
                                  "gaussian:a")
            return gaussian_profile(float(parts[1]))
        if kind == "power":
            if len(parts) != 3:
                raise ConfigError("profile power takes two parameters: "
                                  "power:c:p")
            return power_profile(float(parts[1]), float(parts[2]), dim)
        if kind == "delta":
            if len(parts) != 1:
                raise ConfigError("profile delta takes no parameters")
            return delta_profile()
    except ValueError:
        raise ConfigError(f"invalid profile parameters in {text!r}")
    raise ConfigError(f"unknown profile kind {parts[0]!r} "
                      "(expected gaussian:a, power:c:p or delta)")


def _build_model(cfg: dict) -> Model:
    dim = _parse_int(cfg, "dim")
    if dim < 1:
        raise ConfigError("dim must be a positive integer")
    mass = _parse_float(cfg, "mass")
    if mass <= 0:
        raise ConfigError("mass must be positive")
    u = _parse_float(cfg, "u")
    v = _parse_float(cfg, "v")
    if v <= 0:
        raise ConfigError("requires v > 0")
    if v - u <= 0:
        raise ConfigError("requires v - u > 0")
    profile = _parse_profile(cfg["profile"], dim)
    try:
        return Model(dim=dim, mass=mass, u=u, v=v, lambda_profile=profile)
    except ModelError as exc:
        raise ConfigError(str(exc))


def _solver_settings(cfg: dict):
    eta0 = _parse_float(cfg, "eta0")
    floor = _parse_float(cfg, "eta_floor")
    factor = _parse_float(cfg, "eta_factor")
    tol = _parse_float(cfg, "tol")
    if not (eta0 > floor > 0):
        raise ConfigError("requires eta0 > eta_floor > 0")
    if not (0 < factor < 1):
        raise ConfigError("requires 0 < eta_factor < 1")
    if tol <= 0:
        raise ConfigError("tol must be positive")
    quad = QuadratureConfig(rel_tol=tol, abs_tol=min(tol * 1e-2, 1e-12))
    return eta0, factor, floor, quad


def _parse_beta_single(cfg) -> float:
    beta = _parse_float(cfg, "beta")
    if beta <= 0:
        raise ConfigError("beta must be positive")
    return beta


def _parse_beta_list(cfg) -> list:
    out = []
    for item in str(cfg["beta"]).split(","):
        val = float(item)
        if val <= 0:
            raise ConfigError("beta must be positive")
        out.append(val)
    return out


def _parse_mu_list(cfg) -> list:
    if cfg.get("mu_range"):
        parts = str(cfg["mu_range"]).split(":")
        if len(parts) != 3:
            raise ConfigError("mu-range must be start:stop:count")
        try:
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigError(f"invalid mu-range {cfg['mu_range']!r}")
        if n < 1:
            raise ConfigError("mu-range count must be >= 1")
        if n == 1:
            return [a]
        return [a + (b - a) * i / (n - 1) for i in range(n)]
    return [_parse_float(cfg, "mu")]


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run_continuation(model, tp, eta0, factor, floor, quad):
    cont = eta_continuation(model, tp, eta0=eta0, factor=factor,
                            floor=floor, quad_cfg=quad)
    phase = classify_phase(model, tp, cont)
    return cont, phase


def _solve_document(model, tp, cont, phase) -> dict:
    last = cont.results[-1]
    trace = [
        {
            "eta": res.eta,
            "pressure": res.pressure,
            "q_bar": res.q_bar,
            "rho_bar": res.rho_bar,
            "rho0": res.rho0,
            "gap": res.gap,
            "status": res.status,
        }
        for res in cont.results
    ]
    return {
        "pressure": cont.p_limit,
        "q_bar": cont.q_limit,
        "rho_bar": cont.rho_limit,
        "m0": cont.m0,
        "gap": cont.gap_limit,
        "phase": phase,
        "residuals": {
            "el1": last.residual_el1,
            "el2": last.residual_el2,
        },
        "extrapolation_order": cont.extrapolation_order,
        "error_estimates": cont.error_estimates,
        "eta_trace": trace,
    }


def _json_dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False,
                      allow_nan=True) + "\n"


def cmd_solve(args) -> int:
    cfg = _merge_config(args)
    model = _build_model(cfg)
    eta0, factor, floor, quad = _solver_settings(cfg)
    tp = ThermoPoint(beta=_parse_beta_single(cfg), mu=_parse_float(cfg, "mu"))
    try:
        cont, phase = _run_continuation(model, tp, eta0, factor, floor, quad)
    except _INFEASIBLE_ERRORS as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except _CONVERGENCE_ERRORS as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    doc = _solve_document(model, tp, cont, phase)
    doc["status"] = "converged"
    _emit(_json_dumps(doc), cfg.get("out"))
    return EXIT_OK


# Worker for scan grid points; module-level so it pickles for the pool.
def _scan_point(task):
    cfg, beta, mu = task
    model = _build_model(cfg)
    eta0, factor, floor, quad = _solver_settings(cfg)
    tp = ThermoPoint(beta=beta, mu=mu)
    try:
        cont, phase = _run_continuation(model, tp, eta0, factor, floor, quad)
    except PairBosonError:
        nan = float("nan")
        return (beta, mu, nan, nan, nan, nan, nan, "error")
    return (beta, mu, cont.p_limit, cont.q_limit, cont.rho_limit,
            cont.m0, cont.gap_limit, phase)


def _worker_count(n_tasks: int) -> int:
    env = os.environ.get("PBH_THREADS", "").strip()
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError(f"PBH_THREADS must be an integer, got {env!r}")
        if cap < 1:
            raise ConfigError("PBH_THREADS must be >= 1")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_tasks))


def _scan_rows_to_csv(rows) -> str:
    lines = ["beta,mu,pressure,q_bar,rho_bar,m0,gap,phase"]
    for beta, mu, p, q, rho, m0, gap, phase in rows:
        lines.append(",".join([_fmt(beta), _fmt(mu), _fmt(p), _fmt(q),
                               _fmt(rho), _fmt(m0), _fmt(gap), phase]))
    return "\n".join(lines) + "\n"


def cmd_scan(args) -> int:
    cfg = _merge_config(args)
    _build_model(cfg)          # validate model parameters up front
    _solver_settings(cfg)      # validate solver parameters up front
    betas = _parse_beta_list(cfg)
    mus = _parse_mu_list(cfg)
    tasks = [(cfg, beta, mu) for beta in betas for mu in mus]
    workers = _worker_count(len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_scan_point, tasks))
    else:
        rows = [_scan_point(task) for task in tasks]
    fmt = (cfg.get("format") or "csv").lower()
    if fmt == "json":
        keys = ("beta", "mu", "pressure", "q_bar", "rho_bar",
                "m0", "gap", "phase")
        doc = [dict(zip(keys, row)) for row in rows]
        _emit(_json_dumps(doc), cfg.get("out"))
    elif fmt == "csv":
        _emit(_scan_rows_to_csv(rows), cfg.get("out"))
    else:
        raise ConfigError(f"unknown format {fmt!r} (expected csv or json)")
    if rows and all(row[-1] == "error" for row in rows):
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_spectrum(args) -> int:
    cfg = _merge_config(args)
    model = _build_model(cfg)
    eta0, factor, floor, quad = _solver_settings(cfg)
    tp = ThermoPoint(beta=_parse_beta_single(cfg), mu=_parse_float(cfg, "mu"))
    k_max = _parse_float(cfg, "k_max")
    k_count = _parse_int(cfg, "k_count")
    if k_max <= 0 or k_count < 2:
        raise ConfigError("requires k_max > 0 and k_count >= 2")
    try:
        cont, _ = _run_continuation(model, tp, eta0, factor, floor, quad)
    except _INFEASIBLE_ERRORS as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except _CONVERGENCE_ERRORS as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    grid = np.linspace(0.0, k_max, k_count)
    pairs = excitation_spectrum(model, tp, cont, grid)
    lines = ["k,e_excit"]
    lines.extend(f"{_fmt(k)},{_fmt(e)}" for k, e in pairs)
    _emit("\n".join(lines) + "\n", cfg.get("out"))
    return EXIT_OK


def _default_fock_spec(model: Model, n_max: int) -> "_oracle.FockSpec":
    """Smallest instance coupling the zero mode to a +/-k pair."""
    zero = tuple(0.0 for _ in range(model.dim))
    plus = tuple(1.0 if i == 0 else 0.0 for i in range(model.dim))
    minus = tuple(-x for x in plus)
    return _oracle.FockSpec(modes=(zero, plus, minus), n_max=n_max,
                            headroom=2)


def cmd_oracle(args) -> int:
    cfg = _merge_config(args)
    model = _build_model(cfg)
    tp = ThermoPoint(beta=_parse_beta_single(cfg), mu=_parse_float(cfg, "mu"))
    n_max = _parse_int(cfg, "n_max")
    if n_max < 2:
        raise ConfigError("n_max must be >= 2")
    spec = _default_fock_spec(model, n_max)
    V = float(len(spec.modes))
    eta = _parse_float(cfg, "eta0")
    q_grid = np.linspace(0.0, 0.8, 5)
    rho_grid = np.linspace(0.1, 1.5, 5)
    checks = []
    failed = False
    try:
        checks.append(_oracle.check_superstability(spec, model, V))
        checks.append(_oracle.check_variational_chain(
            spec, model, tp, V, q_grid, rho_grid, eta))
        plus = spec.modes[1]
        zero = spec.modes[0]
        for sign in (1, -1):
            checks.append(_oracle.check_pair_exchange_bound(
                spec, model, plus, zero, sign=sign))
    except InequalityViolated as exc:
        checks.append({"check": "variational_chain", "passed": False,
                       "error": str(exc)})
        failed = True
    except DimensionExceeded as exc:
        raise ConfigError(f"oracle instance too large: {exc}")
    failed = failed or any(not c.get("passed", False) for c in checks)
    report = {
        "instance": {
            "modes": [list(m) for m in spec.modes],
            "n_max": n_max,
            "volume": V,
            "beta": tp.beta,
            "mu": tp.mu,
            "u": model.u,
            "v": model.v,
            "profile": model.lambda_profile.describe(),
        },
        "checks": checks,
        "passed": not failed,
    }
    _emit(_json_dumps(report), cfg.get("out"))
    return EXIT_ORACLE if failed else EXIT_OK


def _add_common_flags(sub: argparse.ArgumentParser):
    sub.add_argument("--beta", help="inverse temperature "
                     "(comma-separated list for scan)")
    sub.add_argument("--mu", help="chemical potential")
    sub.add_argument("--mu-range", dest="mu_range",
                     help="scan grid start:stop:count")
    sub.add_argument("--u", help="pair coupling strength")
    sub.add_argument("--v", help="density repulsion strength")
    sub.add_argument("--mass", help="particle mass")
    sub.add_argument("--dim", help="spatial dimension")
    sub.add_argument("--profile",
                     help="pair profile: gaussian:a | power:c:p | delta")
    sub.add_argument("--eta0", help="initial source strength")
    sub.add_argument("--eta-floor", dest="eta_floor",
                     help="smallest source strength in the continuation")
    sub.add_argument("--eta-factor", dest="eta_factor",
                     help="source reduction factor per step")
    sub.add_argument("--tol", help="target relative tolerance")
    sub.add_argument("--config", help="INI-style config file")
    sub.add_argument("--out", help="output file (default: stdout)")
    sub.add_argument("--format", help="output format: csv | json")
    sub.add_argument("--k-max", dest="k_max",
                     help="spectrum: largest wavenumber")
    sub.add_argument("--k-count", dest="k_count",
                     help="spectrum: number of grid points")
    sub.add_argument("--n-max", dest="n_max",
                     help="oracle: per-mode occupation cutoff")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairboson",
        description="Variational pressure of the pair boson model.")
    subs = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("solve", cmd_solve), ("scan", cmd_scan),
                     ("spectrum", cmd_spectrum), ("oracle", cmd_oracle)):
        sub = subs.add_parser(name)
        _add_common_flags(sub)
        sub.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InequalityViolated as exc:
        print(f"oracle check failed: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except _INFEASIBLE_ERRORS as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except _CONVERGENCE_ERRORS as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
