"""Command line driver: viscap <command> --config <path> [--out <dir>].

Exit codes: 0 ok, 1 validation error, 2 numerical failure, 3 compare check failed.
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .assembly import ExteriorScaling, build_grid
from .birman_schwinger import determinant_scan, find_resonances
from .cap_sweep import (RectangleOmega, ResonanceEstimate, SweepConfig, SweepResult,
                        converged_estimates, run_sweep)
from .davies import resolvent_norm, weighted_cap_resolvent_norm
from .deformation import (DeformationSpec, check_admissible, numerical_range_scan,
                          symbol_region_margin, symbol_values)
from .errors import ConfigurationError, NumericalError
from .potentials import factorize, potential_from_dict

COMMANDS = ("sweep", "oracle", "davies", "symbol", "compare")

DEFAULTS = {
    "potential": {"kind": "sech2", "params": {"V0": 8.0}},
    "grid": {"L": 16.0, "N": 256},
    "scaling": {"start": 3.0, "width": 3.0, "angle": 0.5},
    "omega": {"a_lo": 2.0, "a_hi": 3.5, "gamma_lo": 0.8, "b_hi": 0.5},
    "schedule": {"eps_start": 0.1, "eps_ratio": 10 ** -0.5, "eps_count": 7},
    "tolerances": {"track_radius": 0.1, "cauchy_tol": 1e-2, "delta": 0.05,
                   "bs_tol": 1e-8, "stability_angle": 0.6, "stability_tol": 1e-6},
    "oracle": {"L": 12.0, "N": 600, "scan": False, "scan_n": 21},
    "davies": {"L": 30.0, "N": 512,
               "eps": [4e-2, 2e-2, 1e-2, 5e-3],
               "z": [{"re": math.cos(math.pi / 8), "im": -math.sin(math.pi / 8)}],
               "weighted_eps": [1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
               "lambda": [{"re": 1.5, "im": 0.2}],
               "gamma_w": 1.0},
    "symbol": {"rho_kind": "scaled_tanh", "s": 0.4, "t0": 1.0, "w": 4.0, "gamma": 1.0,
               "thetas": [{"re": 0.0, "im": -0.4}], "h": 0.0, "Xi": 20.0, "n": 101,
               "region": "sector",
               "omega": {"a_lo": 1.0, "a_hi": 3.0, "gamma_lo": 0.1, "b_hi": 1.0}},
    "workers": 1,
}

log = logging.getLogger("viscap")


class AcceptanceFailure(Exception):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k not in ("potential", "omega", "scaling"):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def cjson(z: complex) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _complex_in(d, what: str) -> complex:
    try:
        return complex(float(d["re"]), float(d["im"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"{what} must be {{re, im}}") from exc


def _num(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise NumericalError(f"non-finite value {x} in tabular output")
    return repr(x)


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _write_csv(path: str, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([v if isinstance(v, (int, str)) and not isinstance(v, bool) else _num(v) for v in r])


def estimate_json(e: ResonanceEstimate) -> dict:
    d = {"lambda": cjson(e.lam), "multiplicity": e.multiplicity, "method": e.method,
         "error_estimate": e.error_estimate}
    if e.epsilon is not None:
        d["epsilon"] = e.epsilon
    if e.residual is not None:
        d["residual"] = e.residual
    return d


# --- config -------------------------------------------------------------------

@dataclass
class RunConfig:
    command: str
    raw: dict
    out: str

    def potential(self):
        return potential_from_dict(self.raw["potential"])

    def omega(self) -> RectangleOmega:
        return RectangleOmega.from_dict(self.raw["omega"])

    def scaling(self):
        s = self.raw.get("scaling")
        if s is None:
            return None
        try:
            return ExteriorScaling(float(s["start"]), float(s["width"]), float(s["angle"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError("scaling needs start, width, angle") from exc

    def sweep_config(self) -> SweepConfig:
        g, sch, tol = self.raw["grid"], self.raw["schedule"], self.raw["tolerances"]
        try:
            cfg = SweepConfig(self.potential(), self.omega(), L=float(g["L"]), N=g["N"],
                              eps_start=float(sch["eps_start"]), eps_ratio=float(sch["eps_ratio"]),
                              eps_count=sch["eps_count"], track_radius=float(tol["track_radius"]),
                              cauchy_tol=float(tol["cauchy_tol"]), scaling=self.scaling(),
                              stability_angle=tol.get("stability_angle"),
                              stability_tol=float(tol["stability_tol"]),
                              workers=int(self.raw.get("workers", 1)))
        except (KeyError, TypeError) as exc:
            raise ConfigurationError(f"incomplete sweep configuration: {exc}") from exc
        return cfg.validate()


def load_config(path: str, command: str, out: str | None) -> RunConfig:
    if command not in COMMANDS:
        raise ConfigurationError(f"unknown command {command!r}")
    try:
        with open(path) as fh:
            user = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from exc
    except OSError as exc:
        raise ConfigurationError(f"cannot read config: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigurationError("config must be a JSON object")
    if "command" in user and user["command"] != command:
        raise ConfigurationError(f"config is for command {user['command']!r}, not {command!r}")
    raw = _merge(DEFAULTS, {k: v for k, v in user.items() if k not in ("command", "output")})
    out_dir = out or user.get("output") or "viscap_out"
    rc = RunConfig(command, raw, out_dir)
    try:
        _validate(rc)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"invalid configuration: {exc!r}") from exc
    return rc


def _validate(rc: RunConfig) -> None:
    # everything the command touches is checked before any computation
    if rc.command in ("sweep", "compare"):
        rc.sweep_config()
    if rc.command in ("oracle", "compare"):
        o = rc.raw["oracle"]
        build_grid(float(o["L"]), o["N"])
        rc.omega().validate(sector=False)
        rc.potential()
    if rc.command == "compare":
        if not float(rc.raw["tolerances"]["delta"]) > 0:
            raise ConfigurationError("delta must be positive")
    if rc.command == "davies":
        d = rc.raw["davies"]
        build_grid(float(d["L"]), d["N"])
        for e in list(d["eps"]) + list(d["weighted_eps"]):
            if not float(e) > 0:
                raise ConfigurationError("eps values must be positive")
        [_complex_in(z, "davies.z") for z in d["z"]]
        [_complex_in(z, "davies.lambda") for z in d["lambda"]]
    if rc.command == "symbol":
        _deformation_spec(rc.raw["symbol"])
        [_complex_in(t, "symbol.thetas") for t in rc.raw["symbol"]["thetas"]]


def _deformation_spec(s: dict) -> DeformationSpec:
    try:
        return DeformationSpec(s["rho_kind"], float(s["t0"]), float(s["w"]), float(s["s"]),
                               float(s["gamma"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad deformation spec: {exc}") from exc


# --- commands -----------------------------------------------------------------

def _sweep_rows(r: SweepResult):
    for tr in r.tracks:
        for eps, lam in tr.points:
            z = lam * lam
            yield [eps, tr.track_id, lam.real, lam.imag, z.real, z.imag]


def do_sweep(rc: RunConfig) -> SweepResult:
    cfg = rc.sweep_config()
    log.info("sweep: schedule %s", [float(e) for e in cfg.schedule])
    res = run_sweep(cfg)
    for eps, msg in res.failures:
        log.warning("eps=%r failed: %s", eps, msg)
    if len(res.failures) == len(res.schedule):
        raise NumericalError("eigensolver failed at every eps")
    _write_csv(os.path.join(rc.out, "sweep.csv"),
               ["epsilon", "track_id", "re_lambda", "im_lambda", "re_z", "im_z"], _sweep_rows(res))
    est = converged_estimates(res, cfg.cauchy_tol)
    _write_json(os.path.join(rc.out, "resonances.json"), {
        "estimates": [estimate_json(e) for e in est],
        "orphans": [{"epsilon": o.epsilon, "lambda": cjson(o.lam), "kind": o.kind} for o in res.orphans],
        "failures": [{"epsilon": e, "message": m} for e, m in res.failures],
    })
    return res


def do_oracle(rc: RunConfig) -> list[ResonanceEstimate]:
    o = rc.raw["oracle"]
    g = build_grid(float(o["L"]), o["N"])
    f = factorize(rc.potential(), g)
    omega = rc.omega()
    found = find_resonances(omega, g, f, tol=float(rc.raw["tolerances"]["bs_tol"]))
    log.info("oracle: %d zero(s) of D in Omega", len(found))
    _write_json(os.path.join(rc.out, "oracle.json"), [
        {"lambda": cjson(e.lam), "multiplicity": e.multiplicity, "method": "BS",
         "residual": e.residual} for e in found])
    if o.get("scan"):
        rows = determinant_scan(omega, g, f, int(o.get("scan_n", 21)))
        _write_csv(os.path.join(rc.out, "determinant_scan.csv"),
                   ["re_lambda", "im_lambda", "re_D", "im_D"],
                   ([l.real, l.imag, d.real, d.imag] for l, d in rows))
    return found


def do_davies(rc: RunConfig) -> None:
    d = rc.raw["davies"]
    g = build_grid(float(d["L"]), d["N"])
    rows = []
    for z in (_complex_in(v, "davies.z") for v in d["z"]):
        for eps in d["eps"]:
            nrm = resolvent_norm(float(eps), z, g)
            rows.append([float(eps), z.real, z.imag, nrm, 0, 0.0])
    gw = float(d["gamma_w"])
    for lam in (_complex_in(v, "davies.lambda") for v in d["lambda"]):
        z = lam * lam
        for eps in d["weighted_eps"]:
            nrm = weighted_cap_resolvent_norm(float(eps), lam, gw, g)
            rows.append([float(eps), z.real, z.imag, nrm, 1, gw])
    _write_csv(os.path.join(rc.out, "davies_sweep.csv"),
               ["epsilon", "re_z", "im_z", "norm", "weighted_flag", "gamma_weight"], rows)


def do_symbol(rc: RunConfig) -> None:
    s = rc.raw["symbol"]
    spec = _deformation_spec(s)
    h, Xi, n = float(s["h"]), float(s["Xi"]), int(s["n"])
    ax = np.linspace(-Xi, Xi, n)
    X, S = np.meshgrid(ax, ax, indexing="ij")
    rows = []
    report = {"spec": {"rho_kind": spec.rho_kind, "t0": spec.t0, "w": spec.w, "s": spec.s,
                       "gamma": spec.gamma}, "h": h, "Xi": Xi, "n": n, "thetas": []}
    omega = RectangleOmega.from_dict(s["omega"]) if s.get("omega") else None
    for theta in (_complex_in(t, "symbol.thetas") for t in s["thetas"]):
        q = symbol_values(X, S, theta, h, spec)
        for a, b, v in zip(X.ravel(), S.ravel(), q.ravel()):
            rows.append([a, b, v.real, v.imag, theta.real, theta.imag, h])
        entry = {"theta": cjson(theta),
                 "sector_margin": symbol_region_margin(theta, "sector", h, spec, Xi, n)}
        if omega is not None and theta.real == 0 and theta.imag <= 0:
            adm = check_admissible(omega, -theta.imag, spec)
            entry["admissible"] = adm.passed
            entry["admissibility_margin"] = adm.margin
            if adm.passed:
                entry["omega_margin"] = symbol_region_margin(theta, omega, h, spec, Xi, n)
                scan = numerical_range_scan(theta, spec, Xi, n)
                entry["range_distance"] = scan.min_distance(omega)
                entry["phi_sq_arg_ok"] = scan.phi_sq_arg_ok
        report["thetas"].append(entry)
    _write_csv(os.path.join(rc.out, "symbol_scan.csv"),
               ["xi", "xistar", "re_q", "im_q", "theta_re", "theta_im", "h"], rows)
    _write_json(os.path.join(rc.out, "margin_report.json"), report)


def compare_report(sweep: SweepResult, oracle: list[ResonanceEstimate], delta: float) -> dict:
    """Count final-eps CAP eigenvalues in B(lambda, delta) for each oracle resonance."""
    if not delta > 0:
        raise ConfigurationError("delta must be positive")
    lams = [e.lam for e in oracle if e.multiplicity >= 1]
    for i in range(len(lams)):
        for j in range(i + 1, len(lams)):
            if delta >= 0.5 * abs(lams[i] - lams[j]):
                raise ConfigurationError(
                    f"delta = {delta} is not below half the oracle separation {abs(lams[i] - lams[j]):.4g}")
    eps_last = sweep.final_epsilon
    final = list(sweep.spectra.get(eps_last, [])) if eps_last is not None else []
    entries, used, dists = [], set(), []
    for e in oracle:
        if e.multiplicity < 1:
            continue
        inside = [k for k, c in enumerate(final) if abs(c - e.lam) < delta]
        used.update(inside)
        ent = {"lambda_bs": cjson(e.lam), "multiplicity": e.multiplicity, "count": len(inside),
               "pass": len(inside) == e.multiplicity}
        if inside:
            k = min(inside, key=lambda k: abs(final[k] - e.lam))
            ent["lambda_cap"] = cjson(final[k])
            ent["distance"] = abs(final[k] - e.lam)
            dists.append(ent["distance"])
        else:
            ent["diagnostic"] = "no CAP eigenvalue within delta at the final eps"
        entries.append(ent)
    unmatched = [cjson(final[k]) for k in range(len(final)) if k not in used]
    return {"delta": delta, "epsilon_final": eps_last, "resonances": entries,
            "unmatched_cap": unmatched,
            "max_distance": max(dists) if dists else None,
            "pass": all(e["pass"] for e in entries) and not unmatched}


def do_compare(rc: RunConfig) -> dict:
    res = do_sweep(rc)
    oracle = do_oracle(rc)
    rep = compare_report(res, oracle, float(rc.raw["tolerances"]["delta"]))
    _write_json(os.path.join(rc.out, "compare_report.json"), rep)
    if not rep["pass"]:
        raise AcceptanceFailure("CAP vs BS count check failed; see compare_report.json")
    return rep


DISPATCH = {"sweep": do_sweep, "oracle": do_oracle, "davies": do_davies,
            "symbol": do_symbol, "compare": do_compare}


def _setup_logging(out: str) -> logging.Handler:
    h = logging.FileHandler(os.path.join(out, "run.log"), mode="w")
    h.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("viscap")
    root.setLevel(logging.INFO)
    root.addHandler(h)
    return h


def _fail(out: str, code: int, exc: BaseException, command: str) -> int:
    try:
        os.makedirs(out, exist_ok=True)
        _write_json(os.path.join(out, "error.json"), {
            "exit_code": code, "error": type(exc).__name__, "message": str(exc), "command": command})
    except OSError:
        pass
    print(f"viscap {command}: {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


def run(command: str, config_path: str, out: str | None = None) -> int:
    fallback = out or "viscap_out"
    try:
        rc = load_config(config_path, command, out)
    except ConfigurationError as exc:
        return _fail(fallback, 1, exc, command)
    os.makedirs(rc.out, exist_ok=True)
    stale = os.path.join(rc.out, "error.json")
    if os.path.exists(stale):
        os.remove(stale)
    handler = _setup_logging(rc.out)
    try:
        log.info("command %s", command)
        log.info("resolved config %s", json.dumps(rc.raw, sort_keys=True))
        DISPATCH[command](rc)
        log.info("done")
        return 0
    except ConfigurationError as exc:
        log.error("%s", exc)
        return _fail(rc.out, 1, exc, command)
    except NumericalError as exc:
        log.error("%s", exc)
        return _fail(rc.out, 2, exc, command)
    except AcceptanceFailure as exc:
        log.error("%s", exc)
        return _fail(rc.out, 3, exc, command)
    finally:
        logging.getLogger("viscap").removeHandler(handler)
        handler.close()


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="viscap", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", default=None)
    a = ap.parse_args(argv)
    return run(a.command, a.config, a.out)


if __name__ == "__main__":
    sys.exit(main())
