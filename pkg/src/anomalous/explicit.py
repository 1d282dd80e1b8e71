"""Closed-form solutions and invariant curves.

These serve as oracles for the numerical pipeline:

* stationary solutions at the Sobolev exponent ``m = m_s``,
* the singular stationary power ``C ξ^{-2/(1-m)}`` (the point P2),
* for ``m + p = 2``, the straight-line orbits through P0 or P1 and the
  curved connection ``X = a W^{1/2} + b W`` in the rotated chart,
* the first integral of the Fisher-type equation behind the stationary
  solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConstraintViolated, DomainError
from .params import ModelParams, Regime, critical_exponents
from .phaseplane import MPP2_TOL, SystemVariant, vector_field

__all__ = [
    "RadialFunction",
    "ExplicitConnectionConstants",
    "ExplicitConnectionOrbit",
    "stationary_sobolev",
    "sobolev_connection_curve",
    "p2_power_solution",
    "explicit_connection_constants",
    "explicit_connection_orbit",
    "explicit_line_families",
    "line_family_K",
    "line_family_alpha",
    "flow_coefficients",
    "fisher_first_integral_check",
    "fisher_g_form",
]


@dataclass(frozen=True)
class RadialFunction:
    """A closed-form radial profile with its derivative.

    ``domain`` is the open interval on which the formula is smooth and
    positive.
    """

    f: Callable
    df: Callable
    domain: tuple[float, float]
    label: str = ""

    def __call__(self, xi):
        return self.f(xi)

    def sample(self, grid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        xi = np.asarray(grid, dtype=float)
        return xi, np.asarray(self.f(xi), dtype=float), np.asarray(self.df(xi), dtype=float)


def stationary_sobolev(N: float, p: float, D: float) -> RadialFunction:
    """Stationary solution at ``m = m_s(N)``.

    ``u(r) = [(N²-4)(p+m_s) D / (2 (1 + D r^L)²)]^{1/(p-m_s)}`` with
    ``L = ((N+2)p - (N-2))/2``; ``u'(0) = 0`` and ``u ~ r^{-(N+2)}``.
    """
    if not p > 1.0:
        raise DomainError(f"p must exceed 1, got {p}")
    if not D > 0.0:
        raise DomainError(f"D must be positive, got {D}")
    _, ms = critical_exponents(N)
    L = ((N + 2.0) * p - (N - 2.0)) / 2.0
    e = 1.0 / (p - ms)
    A = (N * N - 4.0) * (p + ms) * D / 2.0

    def f(r):
        r = np.asarray(r, dtype=float)
        return (A / (1.0 + D * r ** L) ** 2) ** e

    def df(r):
        r = np.asarray(r, dtype=float)
        return -2.0 * e * f(r) * D * L * r ** (L - 1.0) / (1.0 + D * r ** L)

    return RadialFunction(f, df, (0.0, math.inf), "stationary_sobolev")


def sobolev_connection_curve(params: ModelParams) -> Callable:
    """``U -> V²`` on the connection of the limit system at ``m = m_s``."""
    if params.regime is not Regime.SOBOLEV:
        raise DomainError(f"the explicit connection curve needs m = m_s, got regime {params.regime}")
    m, p, q = params.m, params.p, params.power
    k = 2.0 * m / (m + p)

    def V2(U):
        return 1.0 - k * np.asarray(U, dtype=float) ** q

    return V2


def p2_power_solution(params: ModelParams) -> RadialFunction:
    """The singular stationary profile ``C ξ^{-2/(1-m)}`` sitting at P2."""
    if params.m >= params.m_c:
        raise DomainError("the singular power solution needs m < m_c")
    N, m, p = params.N, params.m, params.p
    C = (2.0 * m * N * (params.m_c - m) / (m - 1.0) ** 2) ** (1.0 / (p - m))
    k = -2.0 / (1.0 - m)

    def f(xi):
        return C * np.asarray(xi, dtype=float) ** k

    def df(xi):
        xi = np.asarray(xi, dtype=float)
        return C * k * xi ** (k - 1.0)

    return RadialFunction(f, df, (0.0, math.inf), f"p2_power_C={C:.17g}")


# ---------------------------------------------------------------------------
# the m + p = 2 connection

def _f_quadratic(N: float) -> Callable[[float], float]:
    c2, c1, c0 = N * N + 8.0 * N + 4.0, -(2.0 * N * N - 16.0), (N - 2.0) * (N - 6.0)
    return lambda m: c2 * m * m + c1 * m + c0


def _connection_K(N: float, m: float) -> float:
    return ((N * (N + 8.0) * (m - 1.0) + 4.0 * (m + 1.0)) * (N * N * (m - 1.0) - 4.0 * (m + 1.0))
            / (4.0 * N * N * (N + 4.0) ** 2))


def _connection_b(N: float, m: float) -> float:
    return 2.0 * N * (N + 4.0) / (m * N * N - N * N + 8.0 * m * N - 4.0 * N + 4.0 * m + 20.0)


def _connection_a(N: float, m: float, K: float) -> float:
    m_c = (N - 2.0) / N
    den = K * N * N + 2.0 * N * (m - m_c)
    if not den > 0.0:
        raise ConstraintViolated(f"K={K} does not exceed 2(m_c-m)/N")
    return math.sqrt(N * N * (N + 2.0) / den)


@dataclass(frozen=True)
class ExplicitConnectionConstants:
    """Constants of the closed-form connection for ``m + p = 2``.

    The primary branch uses ``m = m3`` (α > 0, admissible for ``N >= 7``);
    ``*_m4`` hold the same constants at ``m = m4``, whose connection belongs
    to the α < 0 system.
    """

    N: float
    m1: float
    m2: float
    m3: float
    m4: float
    a: float
    b: float
    K: float
    a_m4: float
    b_m4: float
    K_m4: float
    admissible: bool

    def f_of_m(self, m):
        return _f_quadratic(self.N)(m)

    def branch(self, which: str) -> tuple[float, float, float, float]:
        """``(m, K, a, b)`` for ``which`` in ``{"m3", "m4"}``."""
        if which == "m3":
            return self.m3, self.K, self.a, self.b
        if which == "m4":
            return self.m4, self.K_m4, self.a_m4, self.b_m4
        raise ValueError("branch must be 'm3' or 'm4'")

    def params(self, which: str = "m3") -> ModelParams:
        m = self.branch(which)[0]
        return ModelParams(self.N, m, 2.0 - m)


def explicit_connection_constants(N: float) -> ExplicitConnectionConstants:
    """Closed-form ``m1..m4`` and ``(a, b, K)`` at ``m3`` and ``m4``.

    ``m3 > 0`` only for ``N > 6``; ``admissible`` flags this.  The roots of
    the quadratic are computed with the cancellation-free variant.
    """
    if not N > 2.0:
        raise DomainError(f"dimension must exceed 2, got {N}")
    c2 = N * N + 8.0 * N + 4.0
    B = -(2.0 * N * N - 16.0)
    c0 = (N - 2.0) * (N - 6.0)
    disc = B * B - 4.0 * c2 * c0  # = 64 (2N² - 4N + 1)
    sq = math.sqrt(disc)
    # B < 0 for N > 2√2, so -B + sq carries no cancellation
    big = (-B + sq) / (2.0 * c2) if B <= 0.0 else (-B - sq) / (2.0 * c2)
    small = c0 / (c2 * big)
    m3, m4 = min(big, small), max(big, small)
    m1 = (N - 6.0) / (N - 2.0)
    m2 = (N * N + 4.0 * N - 20.0) / c2
    out = {}
    for tag, m in (("m3", m3), ("m4", m4)):
        K = _connection_K(N, m)
        b = _connection_b(N, m)
        try:
            a = _connection_a(N, m, K) if m > 0.0 else math.nan
        except ConstraintViolated:
            a = math.nan
        out[tag] = (K, a, b)
    return ExplicitConnectionConstants(
        N=float(N), m1=m1, m2=m2, m3=m3, m4=m4,
        a=out["m3"][1], b=out["m3"][2], K=out["m3"][0],
        a_m4=out["m4"][1], b_m4=out["m4"][2], K_m4=out["m4"][0],
        admissible=m3 > 0.0,
    )


def flow_coefficients(N: float, m: float, K: float, a: float, b: float) -> tuple:
    """``(A1, A2, A3, A4)`` with ``2N²·(normal flow) = A1 W² + A2 W^{3/2} + A3 W + A4 W^{1/2}``.

    The normal flow on ``X = a W^{1/2} + b W`` is ``dX - X'(W) dW``.
    """
    m_c = (N - 2.0) / N
    kk = K * N * N + 2.0 * N * (m - m_c)
    A1 = -2.0 * b ** 3 * kk + 2.0 * b * b * N * (m * N - N + 4.0) - 2.0 * N * N * b
    A2 = -a * (5.0 * K * N * N * b * b - 3.0 * N * N * b * m + 3.0 * N * N * b - N * N * m
               + 2.0 * N * N + 10.0 * N * b * b * m - 10.0 * N * b * b + 2.0 * N * b * m
               - 14.0 * N * b + 20.0 * b * b)
    A3 = a * a * (-4.0 * b * kk + N * (m * N - N - 2.0 * m + 6.0)) + 2.0 * N ** 3 * b
    A4 = (-K * N * N - 2.0 * m * N + 2.0 * N - 4.0) * a ** 3 + N * N * (N + 2.0) * a
    return A1, A2, A3, A4


@dataclass(frozen=True)
class ExplicitConnectionOrbit:
    """The curve ``X(W) = a W^{1/2} + b W`` in the rotated chart.

    ``normal_flow(W)`` is the component of the rotated field across the
    curve; ``polynomial(W)`` is ``2N²`` times the same quantity built from
    the coefficients ``A1..A4``.
    """

    params: ModelParams
    K: float
    a: float
    b: float
    W_end: float
    coefficients: tuple

    def X(self, W):
        W = np.asarray(W, dtype=float)
        return self.a * np.sqrt(W) + self.b * W

    def normal_flow(self, W) -> tuple[np.ndarray, np.ndarray]:
        """Normal flow on the curve and the size of the terms it cancels."""
        vf = vector_field(SystemVariant.ROTATED_XW, self.params, self.K)
        W = np.atleast_1d(np.asarray(W, dtype=float))
        flow = np.empty_like(W)
        size = np.empty_like(W)
        for i, w in enumerate(W):
            x = self.a * math.sqrt(w) + self.b * w
            dx, dw = vf(x, w)
            slope = self.a / (2.0 * math.sqrt(w)) + self.b
            flow[i] = dx - slope * dw
            size[i] = max(abs(dx), abs(slope * dw))
        return flow, size

    def residual(self, W) -> float:
        """Largest normal flow on the grid relative to the largest term."""
        flow, size = self.normal_flow(W)
        return float(np.max(np.abs(flow)) / np.max(size))

    def polynomial(self, W):
        W = np.asarray(W, dtype=float)
        A1, A2, A3, A4 = self.coefficients
        s = np.sqrt(W)
        return A1 * W * W + A2 * W * s + A3 * W + A4 * s


def explicit_connection_orbit(constants: ExplicitConnectionConstants,
                              which: str = "m3") -> ExplicitConnectionOrbit:
    """The closed-form invariant curve on ``W in [0, (N-2)/m]``.

    At ``m3`` (``b < 0``) it joins P0 to P1 in the α > 0 plane.  At ``m4``
    the same constants give an invariant curve of the α > 0 rotated system;
    the connection itself lives in the mirrored system.

    Raises
    ------
    ConstraintViolated
        If the branch is inadmissible (``m <= 0`` or no real ``a``).
    """
    m, K, a, b = constants.branch(which)
    if not (m > 0.0 and math.isfinite(a)):
        raise ConstraintViolated(f"no explicit connection on branch {which} for N={constants.N}")
    params = ModelParams(constants.N, m, 2.0 - m)
    if abs(params.m + params.p - 2.0) > MPP2_TOL:
        raise ConstraintViolated("the explicit connection needs m + p = 2")
    return ExplicitConnectionOrbit(params, K, a, b, (constants.N - 2.0) / m,
                                   flow_coefficients(constants.N, m, K, a, b))


# ---------------------------------------------------------------------------
# straight-line orbits

def line_family_K(params: ModelParams, family: str) -> float:
    """The value of K for which the line family is an orbit."""
    N, m = params.N, params.m
    if family == "P0Q4":
        return 2.0 * (params.m_c - m) / N
    if family == "P1Q4":
        return 2.0 * N * (params.m_c - m) * m * m / (2.0 * m - N + 2.0) ** 2
    raise ValueError("family must be 'P0Q4' or 'P1Q4'")


def line_family_alpha(params: ModelParams, family: str) -> float:
    """The exponent α > 0 tied to the family's K."""
    K = line_family_K(params, family)
    m = params.m
    return 2.0 * m * (m * K) ** (-(1.0 - m) / (params.p - m))


def explicit_line_families(params: ModelParams, family: str, constant: float,
                           alpha: float | None = None, *, K: float | None = None) -> RadialFunction:
    """Profiles on the straight-line orbits of the α > 0 plane (``m + p = 2``).

    ``P0Q4``: ``f = [C - α(1-m) ξ²/(2mN)]^{-1/(1-m)}`` on ``(0, ξ*)``.
    ``P1Q4``: ``f = ξ^{-2/(1-m)} [(1-m)α/(2(N-2-2m)) + D ξ^{N(m_c-m)/m}]^{-1/(1-m)}``.

    When ``K`` is given it must equal the family's value.  ``alpha``
    defaults to the one implied by that K.

    Raises
    ------
    ConstraintViolated
        Off ``m + p = 2`` or with the wrong ``K``.
    """
    if abs(params.m + params.p - 2.0) > MPP2_TOL:
        raise ConstraintViolated("line families need m + p = 2")
    K_req = line_family_K(params, family)
    if K is not None and not math.isclose(K, K_req, rel_tol=1e-10):
        raise ConstraintViolated(f"{family} needs K={K_req:.17g}, got {K}")
    if alpha is None:
        alpha = line_family_alpha(params, family)
    N, m = params.N, params.m
    e = -1.0 / (1.0 - m)
    if family == "P0Q4":
        C = constant
        if not C > 0.0:
            raise DomainError("the P0Q4 family needs C > 0")
        k = alpha * (1.0 - m) / (2.0 * m * N)
        xi_star = math.sqrt(C / k) if k > 0 else math.inf

        def bracket(xi):
            # factored so that the bracket keeps full relative accuracy near ξ*
            xi = np.asarray(xi, dtype=float)
            if k > 0.0:
                return k * (xi_star - xi) * (xi_star + xi)
            return C - k * xi * xi

        def f(xi):
            return bracket(xi) ** e

        def df(xi):
            xi = np.asarray(xi, dtype=float)
            return e * bracket(xi) ** (e - 1.0) * (-2.0 * k * xi)

        return RadialFunction(f, df, (0.0, xi_star), "P0Q4")

    D = constant
    c0 = (1.0 - m) * alpha / (2.0 * (N - 2.0 - 2.0 * m))
    s = N * (params.m_c - m) / m
    k = -2.0 / (1.0 - m)

    def g(xi):
        return c0 + D * xi ** s

    def f(xi):
        xi = np.asarray(xi, dtype=float)
        return xi ** k * g(xi) ** e

    def df(xi):
        xi = np.asarray(xi, dtype=float)
        return f(xi) * (k / xi + e * D * s * xi ** (s - 1.0) / g(xi))

    lo, hi = 0.0, math.inf
    if D < 0.0:
        hi = (c0 / -D) ** (1.0 / s)
    return RadialFunction(f, df, (lo, hi), "P1Q4")


# ---------------------------------------------------------------------------
# Fisher-type first integral at m = m_s

def _fisher_terms(u: RadialFunction | Callable, r: np.ndarray, N: float, p: float):
    _, m = critical_exponents(N)
    m_c = (N - 2.0) / N
    r = np.asarray(r, dtype=float)
    ur = np.asarray(u(r), dtype=float)
    if isinstance(u, RadialFunction):
        dur = np.asarray(u.df(r), dtype=float)
    else:
        dur = np.gradient(ur, r, edge_order=2)
    k = 2.0 / (1.0 - m)
    w = r ** k * ur
    # (w^m)_y with y = ln r
    wm_y = m * w ** (m - 1.0) * (k * w + r ** (k + 1.0) * dur)
    t1 = 0.5 * wm_y ** 2
    t2 = -(m * N * (m_c - m) / (m - 1.0) ** 2) * w ** (2.0 * m)
    t3 = (m / (p + m)) * w ** (p + m)
    return t1, t2, t3, w


def fisher_first_integral_check(u: RadialFunction | Callable, N: float, p: float,
                                r=None) -> float:
    """Largest normalized deviation of the first integral from zero.

    With ``w(y) = r^{2/(1-m)} u(r)``, ``y = ln r`` and ``m = m_s(N)``, a
    stationary solution satisfies
    ``½ ((w^m)_y)² - (mN(m_c-m)/(m-1)²) (w^m)² + (m/(p+m)) w^{p+m} = 0``.
    Each point is normalized by the largest of the three terms.
    """
    if r is None:
        r = np.logspace(-2, 2, 401)
    t1, t2, t3, _ = _fisher_terms(u, r, N, p)
    scale = np.maximum.reduce([np.abs(t1), np.abs(t2), np.abs(t3)])
    return float(np.max(np.abs(t1 + t2 + t3) / scale))


def fisher_g_form(u: RadialFunction | Callable, N: float, p: float, r=None) -> tuple[float, float]:
    """Fit ``g = (m-1)² w^{p-m} / (N(p+m)(m_c-m))`` to ``cosh^{-2}(L(y+C)/2)``.

    Returns the shift ``C`` and the largest absolute deviation.
    """
    if r is None:
        r = np.logspace(-2, 2, 401)
    _, m = critical_exponents(N)
    m_c = (N - 2.0) / N
    L = ((N + 2.0) * p - (N - 2.0)) / 2.0
    _, _, _, w = _fisher_terms(u, r, N, p)
    g = (m - 1.0) ** 2 * w ** (p - m) / (N * (p + m) * (m_c - m))
    y = np.log(np.asarray(r, dtype=float))
    i = int(np.argmax(g))
    # the peak of cosh^{-2} sits at y = -C; refine with the closed form of the inverse
    C = -y[i]
    mask = (g > 1e-3) & (g < 1.0 - 1e-9)
    side = np.sign(y[mask] + C)
    arg = np.arccosh(1.0 / np.sqrt(g[mask])) * 2.0 / L
    C = float(np.median(side * arg - y[mask]))
    dev = float(np.max(np.abs(g - np.cosh(L * (y + C) / 2.0) ** -2)))
    return C, dev
