"""Command-line interface.

Usage::

    anomalous <command> [key=value ...] [--flags]

Parameters come, in increasing priority, from a JSON config file
(``--config`` or the ``ANOMALOUS_SEED_CONFIG`` environment variable),
``key=value`` tokens and flags.  Output goes to ``--out`` or stdout.  CSV
files start with a ``# key=value`` provenance line carrying a hash of the
resolved configuration; JSON numbers are written as 17-digit strings.

Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 failed
verification.  Errors are reported as JSON on stderr.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SolverError
from .integrate import IntegrationControls
from .params import K_from_alpha, derive_params, fujita_gap

__all__ = ["RunConfig", "COMMANDS", "parse_config", "execute", "main"]

COMMANDS = ("regime", "classify", "portrait", "shoot", "profile", "evolve", "mass",
            "explicit", "selfmap", "verify")
EXPLICIT_KINDS = ("stationary", "p2", "P0Q4", "P1Q4", "curve", "sobolev_curve")
CONFIG_ENV = "ANOMALOUS_SEED_CONFIG"

EXIT_DOMAIN, EXIT_SOLVER, EXIT_VERIFY = 2, 3, 4


@dataclass
class RunConfig:
    command: str
    N: float = 3.0
    m: float = 0.1
    p: float = 2.0
    K: float | None = None
    t: tuple[float, ...] = (0.0,)
    xi_min: float = 1e-2
    xi_max: float = 1e2
    points: int = 201
    out: str | None = None
    format: str | None = None
    rel_tol: float | None = None
    abs_tol: float | None = None
    which: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise DomainError(f"unknown command {self.command!r}")
        if self.format not in (None, "csv", "json"):
            raise DomainError(f"format must be csv or json, got {self.format!r}")
        if self.points < 2:
            raise DomainError("points must be at least 2")
        if not 0.0 < self.xi_min < self.xi_max:
            raise DomainError("need 0 < xi_min < xi_max")

    def controls(self) -> IntegrationControls | None:
        changes = {k: v for k, v in (("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol))
                   if v is not None}
        return IntegrationControls().with_(**changes) if changes else None

    def canonical(self) -> dict:
        d = {k: getattr(self, k) for k in ("command", "N", "m", "p", "K", "t", "xi_min",
                                           "xi_max", "points", "rel_tol", "abs_tol", "which")}
        d["t"] = list(d["t"])
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, default=repr).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# parsing

_KEY_ALIASES = {"xi-min": "xi_min", "xi-max": "xi_max", "rel-tol": "rel_tol",
                "abs-tol": "abs_tol"}


def _float_list(text) -> tuple[float, ...]:
    if isinstance(text, (int, float)):
        return (float(text),)
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).split(",") if v.strip())


_CONVERT = {"N": float, "m": float, "p": float, "K": float, "t": _float_list,
            "xi_min": float, "xi_max": float, "points": int, "out": str, "format": str,
            "rel_tol": float, "abs_tol": float, "which": str}


def _rational(text: str) -> float:
    """Accept ``0.1`` as well as ``4/15``."""
    if isinstance(text, str) and "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _convert(key: str, value):
    conv = _CONVERT[key]
    try:
        if conv is float and isinstance(value, str):
            return _rational(value)
        return conv(value)
    except (TypeError, ValueError) as exc:
        raise DomainError(f"invalid value for {key}: {value!r}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise DomainError(message)


def _build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="anomalous", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("tokens", nargs="*", help="key=value settings, or the kind for 'explicit'")
    for name in ("N", "m", "p", "K"):
        ap.add_argument(f"--{name}", dest=name)
    ap.add_argument("--t", dest="t", help="comma-separated times")
    ap.add_argument("--xi-min", dest="xi_min")
    ap.add_argument("--xi-max", dest="xi_max")
    ap.add_argument("--points", dest="points")
    ap.add_argument("--out", dest="out")
    ap.add_argument("--format", dest="format", choices=("csv", "json"))
    ap.add_argument("--config", dest="config")
    ap.add_argument("--rel-tol", dest="rel_tol")
    ap.add_argument("--abs-tol", dest="abs_tol")
    return ap


def _load_config_file(path: str | None) -> dict:
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DomainError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise DomainError("config file must hold a JSON object")
    return {_KEY_ALIASES.get(k, k): v for k, v in data.items()}


def parse_config(argv: list[str]) -> RunConfig:
    """Resolve a :class:`RunConfig` from the file, ``key=value`` tokens and flags."""
    args = _build_parser().parse_intermixed_args(argv)
    settings = _load_config_file(args.config)
    settings.pop("command", None)
    for tok in args.tokens:
        if "=" in tok:
            key, value = tok.split("=", 1)
            settings[_KEY_ALIASES.get(key, key)] = value
        elif args.command == "explicit" and "which" not in settings:
            settings["which"] = tok
        else:
            raise DomainError(f"unexpected argument {tok!r}")
    for key in _CONVERT:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    unknown = set(settings) - set(_CONVERT)
    if unknown:
        raise DomainError(f"unknown settings: {', '.join(sorted(unknown))}")
    resolved = {k: _convert(k, v) for k, v in settings.items() if v is not None}
    return RunConfig(command=args.command, **resolved)


# ---------------------------------------------------------------------------
# formatting

def _num(x) -> str:
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, complex):
        return [_num(obj.real), _num(obj.imag)]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "value"):
        return obj.value
    return str(obj)


def _dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=False) + "\n"


def _provenance(cfg: RunConfig, extra: dict | None = None) -> dict:
    prov = {"command": cfg.command, "N": _num(cfg.N), "m": _num(cfg.m), "p": _num(cfg.p)}
    if extra:
        prov.update({k: _num(v) if isinstance(v, float) else v for k, v in extra.items()})
    prov["config_hash"] = cfg.config_hash()
    return prov


def _csv(header: list[str], rows, provenance: dict) -> str:
    buf = io.StringIO()
    buf.write("# " + " ".join(f"{k}={v}" for k, v in provenance.items()) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


@dataclass
class Output:
    text: str
    exit_code: int = 0
    kind: str = "json"


# ---------------------------------------------------------------------------
# commands

def _params(cfg: RunConfig, strict: bool = True):
    return derive_params(cfg.N, cfg.m, cfg.p, strict=strict)


def _solution(cfg: RunConfig):
    from .shooting import solve_anomalous

    return solve_anomalous(_params(cfg), controls=cfg.controls(), bracket_hint=cfg.K)


def cmd_regime(cfg: RunConfig) -> Output:
    P = _params(cfg)
    return Output(_dump_json({**P.as_dict(), **fujita_gap(P).as_dict()}))


def cmd_classify(cfg: RunConfig) -> Output:
    from .phaseplane import SystemVariant, finite_critical_points, infinity_critical_points

    P = _params(cfg)
    K = 1.0 if cfg.K is None else cfg.K
    points = finite_critical_points(P, K, SystemVariant.XY_PLUS)
    points += infinity_critical_points(P, K)
    return Output(_dump_json({"N": P.N, "m": P.m, "p": P.p, "K": K,
                              "points": [pt.as_dict() for pt in points]}))


def _orbit_rows(name: str, orbit):
    rows = [(name, float(t), float(u), float(v), "") for t, (u, v) in zip(orbit.eta, orbit.y)]
    for ev in orbit.events:
        rows.append((name, float(orbit.direction * ev.param), float(ev.state[0]),
                     float(ev.state[1]), ev.label))
    rows.sort(key=lambda r: (r[1] * orbit.direction, r[4] != ""))
    return rows


def cmd_portrait(cfg: RunConfig) -> Output:
    from .integrate import StopSet, integrate_orbit
    from .phaseplane import uv_field
    from .shooting import P2_UV, launch_separatrix

    if cfg.K is None:
        raise DomainError("portrait needs K")
    P = _params(cfg)
    ctl = cfg.controls() or IntegrationControls()
    l0 = launch_separatrix(P, cfg.K, "l0", controls=ctl, stop_at_crossing=False)
    l1 = launch_separatrix(P, cfg.K, "l1", controls=ctl, stop_at_crossing=False)
    mirrored = bool(l0.launch.get("mirrored"))
    vf = uv_field(P, cfg.K, mirrored=mirrored)
    rows = _orbit_rows("l0", l0) + _orbit_rows("l1", l1)
    aux_ctl = ctl.with_(max_param=min(ctl.max_param, 30.0))
    for i, U in enumerate((0.25, 0.5, 1.5, 2.5)):
        orbit = integrate_orbit(vf, (U, 0.0), 1, aux_ctl, StopSet(targets={"P2": P2_UV}))
        rows += _orbit_rows(f"aux{i}", orbit)
    prov = _provenance(cfg, {"K": cfg.K, "mirrored": str(mirrored).lower()})
    return Output(_csv(["orbit", "eta", "U", "V", "event"], rows, prov), kind="csv")


def cmd_shoot(cfg: RunConfig) -> Output:
    from .shooting import find_K_star

    P = _params(cfg)
    res = find_K_star(P, cfg.K, controls=cfg.controls())
    return Output(_dump_json({"N": P.N, "m": P.m, "p": P.p, "regime": P.regime.value,
                              **res.as_dict()}))


def cmd_profile(cfg: RunConfig) -> Output:
    from .profiles import write_profile_csv

    sol = _solution(cfg)
    prov = _provenance(cfg, {"alpha": sol.exponents.alpha, "beta": sol.exponents.beta,
                             "normalization": "f(0)=1"})
    if cfg.format == "json":
        pr = sol.profile
        return Output(_dump_json({"alpha": sol.exponents.alpha, "beta": sol.exponents.beta,
                                  "xi": pr.xi, "f": pr.f, "fprime": pr.fprime,
                                  "tail_C": pr.tail.C, "tail_slope": pr.tail.slope}))
    return Output(write_profile_csv(sol.profile, prov), kind="csv")


def _radii(cfg: RunConfig) -> np.ndarray:
    return np.logspace(math.log10(cfg.xi_min), math.log10(cfg.xi_max), cfg.points)


def cmd_evolve(cfg: RunConfig) -> Output:
    from .profiles import write_snapshots_csv

    sol = _solution(cfg)
    prov = _provenance(cfg, {"alpha": sol.exponents.alpha, "beta": sol.exponents.beta})
    return Output(write_snapshots_csv(sol, _radii(cfg), cfg.t, prov), kind="csv")


def cmd_mass(cfg: RunConfig) -> Output:
    from .profiles import mass

    sol = _solution(cfg)
    rows = []
    rate = 0.0
    for t in cfg.t:
        M, rate = mass(sol, t)
        rows.append((float(t), float(M), float(rate)))
    if cfg.format == "csv":
        return Output(_csv(["t", "M", "rate"], rows, _provenance(cfg)), kind="csv")
    return Output(_dump_json({"alpha": sol.exponents.alpha, "beta": sol.exponents.beta,
                              "rate": rate, "t": [r[0] for r in rows],
                              "M": [r[1] for r in rows]}))


def cmd_explicit(cfg: RunConfig) -> Output:
    from . import explicit as ex

    which = cfg.which or "stationary"
    if which not in EXPLICIT_KINDS:
        raise DomainError(f"explicit kind must be one of {', '.join(EXPLICIT_KINDS)}")
    if which == "curve":
        const = ex.explicit_connection_constants(cfg.N)
        orbit = ex.explicit_connection_orbit(const)
        W = np.linspace(0.0, orbit.W_end, cfg.points)
        rows = [(float(w), float(x)) for w, x in zip(W, orbit.X(W))]
        prov = _provenance(cfg, {"m": const.m3, "K": const.K, "a": const.a, "b": const.b})
        return Output(_csv(["W", "X"], rows, prov), kind="csv")
    if which == "sobolev_curve":
        P = derive_params(cfg.N, derive_params(cfg.N, 0.5, cfg.p).m_s, cfg.p)
        V2 = ex.sobolev_connection_curve(P)
        U_end = ((P.m + P.p) / (2.0 * P.m)) ** (1.0 / P.power)
        U = np.linspace(0.0, U_end, cfg.points)
        rows = [(float(u), float(v)) for u, v in zip(U, np.maximum(V2(U), 0.0))]
        return Output(_csv(["U", "V2"], rows, _provenance(cfg)), kind="csv")
    if which == "stationary":
        rf = ex.stationary_sobolev(cfg.N, cfg.p, 1.0 if cfg.K is None else cfg.K)
    elif which == "p2":
        rf = ex.p2_power_solution(_params(cfg))
    else:
        rf = ex.explicit_line_families(_params(cfg), which, 1.0)
    xi = _radii(cfg)
    lo, hi = rf.domain
    xi = xi[(xi > lo) & (xi < hi)]
    _, f, df = rf.sample(xi)
    rows = [(float(a), float(b), float(c)) for a, b, c in zip(xi, f, df)]
    return Output(_csv(["xi", "f", "fprime"], rows, _provenance(cfg, {"kind": rf.label})),
                  kind="csv")


def cmd_selfmap(cfg: RunConfig) -> Output:
    from .params import C_K_coefficient, C_s_coefficient
    from .profiles import ode_residual
    from .selfmap import map_parameters, map_params, map_profile

    P = _params(cfg)
    report = {}
    if cfg.K is not None:
        im = map_parameters(P.N, P.m, P.p, cfg.K)
    else:
        sol = _solution(cfg)
        K = K_from_alpha(P, sol.exponents.alpha)
        im = map_params(P, K, sol.exponents)
        mapped = map_profile(im, sol.profile)
        report["mapped_profile_residual"] = ode_residual(mapped, im.params_bar(), im.exponents_bar)
    back = map_parameters(im.N_bar, P.m, P.p, im.K_bar, im.alpha_bar, im.beta_bar)
    report.update({
        **im.as_dict(),
        "regime_bar": im.params_bar().regime.value,
        "C_s": C_s_coefficient(P.N, P.m), "C_s_bar": C_s_coefficient(im.N_bar, P.m),
        "C_K": C_K_coefficient(P.N, P.m, P.p, im.K),
        "C_K_bar": C_K_coefficient(im.N_bar, P.m, P.p, im.K_bar),
        "N_bar_bar": back.N_bar,
    })
    return Output(_dump_json(report))


def cmd_verify(cfg: RunConfig) -> Output:
    from .oracles import run_checks

    checks = run_checks()
    ok = all(c.passed for c in checks)
    return Output(_dump_json({"passed": ok, "checks": [c.as_dict() for c in checks]}),
                  0 if ok else EXIT_VERIFY)


_DISPATCH = {
    "regime": cmd_regime, "classify": cmd_classify, "portrait": cmd_portrait,
    "shoot": cmd_shoot, "profile": cmd_profile, "evolve": cmd_evolve, "mass": cmd_mass,
    "explicit": cmd_explicit, "selfmap": cmd_selfmap, "verify": cmd_verify,
}


def execute(cfg: RunConfig) -> Output:
    return _DISPATCH[cfg.command](cfg)


def _error(exc: Exception, code: int) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc),
                                 "exit_code": code}) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        out = execute(cfg)
    except DomainError as exc:
        return _error(exc, EXIT_DOMAIN)
    except SolverError as exc:
        return _error(exc, EXIT_SOLVER)
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(out.text)
    else:
        try:
            sys.stdout.write(out.text)
            sys.stdout.flush()
        except BrokenPipeError:
            # the reader went away (e.g. piped into head); silence the final flush
            os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    return out.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
