"""
Command-line front end.

    tdmass ermakov  rho(tau), omega = 1/rho^2 and Theta per profile parameter
    tdmass evolve   closed-form propagation of a coherent state, CSV + summary JSON
    tdmass verify   grid and number-basis cross-checks; exit code 0 iff all pass

Configuration is one JSON document (``--config``); command-line flags override
its fields. A profile entry may list several beta/gamma values, e.g.
{"kind": "hyperbolic", "beta": [0.2, 0.5, 1.0]}, which runs one job per value.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import checks
from . import ermakov as er
from . import gaussian as ga
from . import grid_oracle as go
from . import profiles as pr

log = logging.getLogger("tdmass")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    profile: dict = field(default_factory=lambda: {"kind": "hyperbolic", "beta": 1.0})
    tau_min: float | None = None
    tau_max: float | None = None
    samples: int = 2001
    alpha_re: float = 1.0
    alpha_im: float = 0.0
    initial_frame: str = "invariant"
    grid_n: int = go.DEFAULT_N
    grid_l: float | None = None
    dt: float = go.DEFAULT_DT
    fock_dim: int = 64
    out: str = "out"
    jobs: int = 1
    verify_profiles: list = field(default_factory=lambda: [
        {"kind": "hyperbolic", "beta": 1.0}, {"kind": "quadratic", "gamma": 1.0}])
    verify_taus: list = field(default_factory=lambda: [0.5, 1.0, 2.0])
    convergence_dt: float = 1e-3
    corrupt_bch_sign: bool = False  # test hook: use the opposite q^2 coefficient sign

    @property
    def alpha(self) -> complex:
        return complex(self.alpha_re, self.alpha_im)

    def validate(self) -> "RunConfig":
        if self.samples < 2:
            raise ConfigError("samples: need at least 2")
        if not self.dt > 0:
            raise ConfigError("dt: must be positive")
        if self.grid_n < 4 or self.grid_n & (self.grid_n - 1):
            raise ConfigError("grid_n: must be a power of two")
        if self.grid_l is not None and not self.grid_l > 0:
            raise ConfigError("grid_l: must be positive")
        if self.fock_dim < 24:
            raise ConfigError("fock_dim: must be at least 24 (16 edge states are discarded)")
        if self.initial_frame not in ("invariant", "coherent"):
            raise ConfigError("initial_frame: must be 'invariant' or 'coherent'")
        for prof in expand_profiles(self.profile):
            lo, hi = self.tau_range(prof)
            if not lo < hi:
                raise ConfigError(f"tau range [{lo}, {hi}] is empty")
            if lo < prof.tau_min or hi > prof.tau_max:
                raise ConfigError(f"tau range [{lo}, {hi}] outside the domain of {prof!r}")
        return self

    def tau_range(self, prof: pr.MassProfile):
        if isinstance(prof, pr.Hyperbolic):
            lo, hi = 0.1, 6.0
        elif isinstance(prof, pr.Quadratic):
            lo, hi = 0.0, 10.0
        else:
            lo, hi = prof.tau_min, prof.tau_max
        return (lo if self.tau_min is None else self.tau_min,
                hi if self.tau_max is None else self.tau_max)


def _json_error(text: str, err: json.JSONDecodeError, source: str) -> ConfigError:
    line = text.splitlines()[err.lineno - 1] if text.splitlines() else ""
    return ConfigError(f"{source}:{err.lineno}:{err.colno}: {err.msg}\n    {line}")


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise _json_error(text, err, path) from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def build_config(args: argparse.Namespace) -> RunConfig:
    data = load_config(args.config)
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{args.config}: unknown config keys {unknown}")
    overrides = {
        "out": args.out, "tau_min": args.tau_min, "tau_max": args.tau_max,
        "samples": args.samples, "alpha_re": args.alpha_re, "alpha_im": args.alpha_im,
        "dt": args.dt, "grid_n": args.grid_n, "grid_l": args.grid_l,
        "fock_dim": args.fock_dim, "jobs": args.jobs,
    }
    if args.profile is not None:
        try:
            overrides["profile"] = json.loads(args.profile)
        except json.JSONDecodeError as err:
            raise _json_error(args.profile, err, "--profile") from None
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        cfg = RunConfig(**data)
    except TypeError as err:
        raise ConfigError(str(err)) from None
    try:
        return cfg.validate()
    except (KeyError, ValueError) as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(f"profile: {err}") from None


def expand_profiles(spec: dict):
    """One profile per listed parameter value."""
    spec = dict(spec)
    for key in ("beta", "gamma"):
        if isinstance(spec.get(key), list):
            return [pr.profile_from_dict({**spec, key: v}) for v in spec[key]]
    return [pr.profile_from_dict(spec)]


def profile_tag(prof: pr.MassProfile) -> str:
    if isinstance(prof, pr.Hyperbolic):
        return f"beta_{prof.beta:g}"
    if isinstance(prof, pr.Quadratic):
        return f"gamma_{prof.gamma:g}"
    return "tabulated"


def _grid(cfg: RunConfig, prof: pr.MassProfile) -> np.ndarray:
    lo, hi = cfg.tau_range(prof)
    return np.linspace(lo, hi, cfg.samples)


def _map(cfg: RunConfig, fn, items):
    if cfg.jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# -- commands -------------------------------------------------------------


def cmd_ermakov(cfg: RunConfig) -> list:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)

    def run(prof):
        sol = er.solve(prof, _grid(cfg, prof))
        data = np.column_stack([sol.tau, sol.rho, sol.omega, sol.theta])
        path = out / f"rho_omega_{profile_tag(prof)}.csv"
        np.savetxt(path, data, fmt="%.17g", delimiter=",", header="tau,rho,omega,theta", comments="")
        sol.to_csv(out / f"ermakov_{profile_tag(prof)}.csv")
        return path

    return _map(cfg, run, expand_profiles(cfg.profile))


def cmd_evolve(cfg: RunConfig) -> list:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)

    def run(prof):
        try:
            sol = er.solve(prof, _grid(cfg, prof))
            init = checks.seed_state(sol, cfg.alpha, cfg.initial_frame)
            reports = ga.propagate_series(sol, init)
            crit = er.find_critical_points(sol)
            at_crit = [ga.propagate(prof, sol, tp, init) for tp, _ in crit]
        except (pr.ProfileDomainError, er.IntegrationError, er.SingularityError) as err:
            raise RuntimeError(f"{pr.profile_to_dict(prof)}: {err}") from err
        tag = profile_tag(prof)
        ga.write_reports_csv(out / f"evolution_{tag}.csv", reports)
        summary = {
            "profile": pr.profile_to_dict(prof),
            "alpha": [cfg.alpha.real, cfg.alpha.imag],
            "initial_frame": cfg.initial_frame,
            "tau_range": [float(sol.tau_start), float(sol.tau_end)],
            "tau_p": [tp for tp, _ in crit],
            "rho_at_tau_p": [rho for _, rho in crit],
            "r_at_tau_p": [rep.r for rep in at_crit],
            "uncertainty_at_tau_p": [rep.uncertainty for rep in at_crit],
            "min_uncertainty": min(rep.uncertainty for rep in reports + at_crit),
            "invariant_drift": max(abs(rep.invariant - reports[0].invariant) for rep in reports),
        }
        _write_json(out / f"summary_{tag}.json", summary)
        return summary

    return _map(cfg, run, expand_profiles(cfg.profile))


def _check(name, parameters, discrepancy, tolerance, comparison="lt"):
    ok = discrepancy < tolerance if comparison == "lt" else abs(discrepancy - tolerance[0]) <= tolerance[1]
    return {"check": name, "parameters": parameters, "discrepancy": discrepancy,
            "tolerance": tolerance, "pass": bool(ok)}


def cmd_verify(cfg: RunConfig) -> dict:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    profiles = [pr.profile_from_dict(p) for p in cfg.verify_profiles]

    def grid_run(prof):
        return prof, checks.cross_validate(prof, cfg.alpha, tuple(cfg.verify_taus), n=cfg.grid_n,
                                           dt=cfg.dt, length=cfg.grid_l)

    for prof, cv in _map(cfg, grid_run, profiles):
        p = pr.profile_to_dict(prof)
        for t, e in sorted(cv.infidelity.items()):
            results.append(_check("propagator_fidelity", {**p, "tau": t, "grid_l": cv.length}, e, 1e-3))
        for t, e in sorted(cv.picture_infidelity.items()):
            results.append(_check("picture_equivalence", {**p, "tau": t, "grid_l": cv.length}, e, 1e-3))
        results.append(_check("grid_invariant_drift", p, cv.grid_invariant_drift, 1e-3))
        results.append(_check("analytic_invariant_drift", p, cv.analytic_invariant_drift, 1e-9))

    for prof in profiles:
        e1, e2, ratio = checks.convergence_ratio(prof, cfg.convergence_dt, cfg.alpha, n=cfg.grid_n,
                                                 length=cfg.grid_l)
        results.append(_check("convergence_order",
                              {**pr.profile_to_dict(prof), "dt": cfg.convergence_dt,
                               "error_dt": e1, "error_half_dt": e2},
                              ratio, (4.0, 1.0), comparison="near"))

    sign = -1 if cfg.corrupt_bch_sign else +1
    for row in checks.fock_grid_checks(cfg.fock_dim, sign=sign):
        params = {"rho": row["rho"], "rho_dot": row["rho_dot"], "dim": cfg.fock_dim,
                  "trusted_block": cfg.fock_dim - 16}
        results.append(_check("bch", {**params, "sign": sign}, row["bch"], 1e-6))
        results.append(_check("invariant_similarity", params, row["similarity"], 1e-8))

    report = {"all_pass": all(r["pass"] for r in results), "checks": results}
    _write_json(out / "verify_report.json", report)
    return report


# -- entry point ----------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--out", metavar="DIR", help="output directory (default: out)")
    common.add_argument("--profile", metavar="JSON",
                        help='inline profile, e.g. \'{"kind":"quadratic","gamma":1}\' '
                             '(default: hyperbolic beta=1)')
    common.add_argument("--tau-min", type=float,
                        help="start time (default: 0.1 hyperbolic, 0 quadratic, first node tabulated)")
    common.add_argument("--tau-max", type=float,
                        help="end time (default: 6 hyperbolic, 10 quadratic, last node tabulated)")
    common.add_argument("--samples", type=int, help="tau samples (default: 2001)")
    common.add_argument("--alpha-re", type=float, help="Re alpha of the coherent state (default: 1)")
    common.add_argument("--alpha-im", type=float, help="Im alpha (default: 0)")
    common.add_argument("--dt", type=float, help=f"grid time step (default: {go.DEFAULT_DT})")
    common.add_argument("--grid-n", type=int, help=f"grid points, power of two (default: {go.DEFAULT_N})")
    common.add_argument("--grid-l", type=float,
                        help="grid extent (default: smallest multiple of 8 >= 24 that keeps the state resolved)")
    common.add_argument("--fock-dim", type=int, help="number-basis truncation (default: 64)")
    common.add_argument("--jobs", type=int, help="worker threads for parameter sweeps (default: 1)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="tdmass", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ermakov", parents=[common], help="write rho/omega/Theta tables")
    sub.add_parser("evolve", parents=[common], help="propagate a coherent state")
    sub.add_parser("verify", parents=[common], help="run the cross-validation suite")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
    except (ConfigError, OSError) as err:
        print(f"tdmass: config error: {err}", file=sys.stderr)
        return 2
    start = time.perf_counter()
    if args.command == "ermakov":
        for path in cmd_ermakov(cfg):
            print(path)
        code = 0
    elif args.command == "evolve":
        try:
            summaries = cmd_evolve(cfg)
        except RuntimeError as err:
            print(f"tdmass: {err}", file=sys.stderr)
            return 1
        for s in summaries:
            print(json.dumps({"profile": s["profile"], "tau_p": s["tau_p"],
                              "min_uncertainty": s["min_uncertainty"]}))
        code = 0
    else:
        report = cmd_verify(cfg)
        for r in report["checks"]:
            print(f"{'PASS' if r['pass'] else 'FAIL'} {r['check']:<26} {r['discrepancy']:.3e} "
                  f"{json.dumps(r['parameters'], sort_keys=True)}")
        code = 0 if report["all_pass"] else 1
    log.info("%s finished in %.1f s", args.command, time.perf_counter() - start)
    return code


if __name__ == "__main__":
    sys.exit(main())
