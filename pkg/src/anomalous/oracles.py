"""Closed-form oracles checked against the numerical pipeline.

Each check returns a :class:`Check` carrying the measured value and the
tolerance it is held to.  ``run_checks`` runs them all; the ``verify``
command of the CLI reports the result and exits non-zero on any failure.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import AnomalousError
from .explicit import (explicit_connection_constants, explicit_connection_orbit,
                       explicit_line_families, fisher_first_integral_check,
                       line_family_alpha, p2_power_solution, sobolev_connection_curve,
                       stationary_sobolev)
from .integrate import IntegrationControls, StopSet, integrate_orbit
from .params import (C_K_coefficient, C_s_coefficient, ExponentPair, critical_exponents,
                     derive_params)
from .phaseplane import SystemVariant, vector_field
from .profiles import Profile, ode_residual
from .selfmap import map_parameters
from .shooting import find_K_star

__all__ = ["Check", "CHECKS", "run_checks", "clustered_grid", "sobolev_curve_deviation"]


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return math.isfinite(self.value) and self.value < self.tol

    def as_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "tol": self.tol,
                "passed": self.passed, "detail": self.detail}


def _residual_of(rf, params, exponents, lo, hi, points=4001) -> float:
    prof = Profile.from_function(rf.f, rf.df, lo, hi, points, f0=1.0)
    return ode_residual(prof, params, exponents)


def check_stationary() -> Check:
    P = derive_params(3, 0.2, 2.0)
    rf = stationary_sobolev(3, 2.0, 1.0)
    return Check("stationary_sobolev residual", _residual_of(rf, P, ExponentPair(0.0, 0.0), 1e-3, 1e3),
                 1e-8, "N=3 p=2 D=1")


def check_p2_power() -> Check:
    P = derive_params(3, 0.1, 2.0)
    rf = p2_power_solution(P)
    return Check("p2_power residual", _residual_of(rf, P, ExponentPair(0.0, 0.0), 0.5, 5.0, 401),
                 1e-8, "N=3 m=0.1 p=2 on [0.5, 5]")


def clustered_grid(lo: float, hi: float, gap: float = 1e-6, points: int = 8000) -> np.ndarray:
    """Grid on ``[lo, hi - gap]``, geometric in ``ξ`` on the left half and
    geometric in the distance to ``hi`` on the right half."""
    mid = 0.5 * hi
    left = np.logspace(math.log10(lo), math.log10(mid), points)
    right = hi - np.logspace(math.log10(hi - mid), math.log10(gap), points)[1:]
    return np.concatenate([left, right])


def check_line_P0Q4() -> Check:
    P = derive_params(3, 0.1, 1.9)
    alpha = line_family_alpha(P, "P0Q4")
    rf = explicit_line_families(P, "P0Q4", 1.0, alpha)
    prof = Profile.from_function(rf.f, rf.df, grid=clustered_grid(1e-3, rf.domain[1]))
    return Check("P0Q4 line family residual",
                 ode_residual(prof, P, ExponentPair.from_alpha(alpha, P.m)),
                 1e-8, "N=3 m=0.1 C=1, up to 1e-6 from the asymptote")


def check_line_P1Q4() -> Check:
    P = derive_params(3, 0.1, 1.9)
    alpha = line_family_alpha(P, "P1Q4")
    rf = explicit_line_families(P, "P1Q4", 1.0, alpha)
    return Check("P1Q4 line family residual",
                 _residual_of(rf, P, ExponentPair.from_alpha(alpha, P.m), 1e-2, 1e2),
                 1e-8, "N=3 m=0.1 D=1")


def check_curve() -> Check:
    orbit = explicit_connection_orbit(explicit_connection_constants(7), "m3")
    W = np.linspace(0.0, orbit.W_end, 102)[1:-1]
    return Check("explicit connection flow residual", orbit.residual(W), 1e-9, "N=7 m=m3")


def check_fisher() -> Check:
    return Check("Fisher first integral", fisher_first_integral_check(stationary_sobolev(3, 2.0, 1.0), 3, 2.0),
                 1e-8, "N=3 p=2 D=1")


def sobolev_curve_deviation(N: float = 3, p: float = 2.0, offset: float = 1e-8) -> float:
    """Integrate the limit system at ``m = m_s`` from P0 and compare with the curve."""
    m_s = critical_exponents(N)[1]
    P = derive_params(N, m_s, p)
    vf = vector_field(SystemVariant.UV_LIMIT, P, 0.0, C_s=0.0)
    ctl = IntegrationControls(rel_tol=1e-12, abs_tol=1e-14, max_step=0.05, max_param=60.0)
    orbit = integrate_orbit(vf, (offset, 1.0), 1, ctl, StopSet(targets={"P1": (0.0, -1.0)}))
    curve = sobolev_connection_curve(P)
    return float(np.max(np.abs(orbit.v ** 2 - curve(orbit.u))))


def check_sobolev_curve() -> Check:
    return Check("Sobolev connection curve", sobolev_curve_deviation(), 1e-6, "N=3 p=2")


def _k_star_check(which: str) -> Check:
    const = explicit_connection_constants(7)
    m, K, _, _ = const.branch(which)
    P = derive_params(7, m, 2.0 - m)
    res = find_K_star(P, K)
    return Check(f"K* vs closed form ({which})", abs(res.K_star / K - 1.0), 1e-4,
                 f"N=7 K*={res.K_star:.12g} closed form {K:.12g}")


def check_selfmap() -> Check:
    N, m, p, K = 3, 0.1, 2.0, 1.0
    im = map_parameters(N, m, p, K)
    back = map_parameters(im.N_bar, m, p, im.K_bar)
    err = max(abs(C_s_coefficient(im.N_bar, m) + C_s_coefficient(N, m)),
              abs(C_K_coefficient(im.N_bar, m, p, im.K_bar) - C_K_coefficient(N, m, p, K)),
              abs(back.N_bar - N), abs(back.K_bar - K))
    return Check("self-map identities", err, 1e-10, "N=3 m=0.1 p=2 K=1")


CHECKS: tuple[Callable[[], Check], ...] = (
    check_stationary, check_p2_power, check_line_P0Q4, check_line_P1Q4, check_curve,
    check_fisher, check_sobolev_curve, lambda: _k_star_check("m3"),
    lambda: _k_star_check("m4"), check_selfmap,
)


def _safe(check: Callable[[], Check]) -> Check:
    try:
        return check()
    except AnomalousError as exc:
        name = getattr(check, "__name__", "check")
        return Check(name, math.inf, 0.0, f"{type(exc).__name__}: {exc}")


def run_checks(workers: int = 4) -> list[Check]:
    """Run every oracle; results keep the order of :data:`CHECKS`."""
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_safe, CHECKS))
