"""Shooting for the saddle-saddle connection P0 -> P1.

In the renormalized plane the orbit ``l0(K)`` leaving P0 and the orbit
``l1(K)`` entering P1 are followed up to the U axis.  With ``U0(K)`` the
first crossing of ``l0`` and ``U1(K)`` the last crossing of ``l1`` (the
first one met when integrating backwards from P1), ``g = U0 - U1`` is
positive for small K, negative for large K and strictly decreasing in
between; its zero ``K*`` is the connection.

When ``l1`` comes out of P2 (its backward run is captured there) ``U1`` is
set to 1, the U coordinate of P2, even if the orbit crosses the axis on
its way from P2 to P1.  This gives the plateau ``U1 = 1`` for every
``K < K*``; the zero of ``g`` does not depend on the convention.

For ``m_s < m < m_c`` the same construction runs on the mirrored system
(``C_s -> -C_s``); the connection is mapped back through ``V -> -V`` and
time reversal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import (BracketNotFound, DomainError, NoEternalSolutions, ShootingError)
from .integrate import (EventKind, IntegrationControls, Orbit, StopSet, integrate_orbit)
from .params import (ExponentPair, ModelParams, Regime, exponents_from_K,
                     renormalized_coefficients)
from .phaseplane import SystemVariant, VectorField, uv_field

__all__ = [
    "CrossingMeasure",
    "ShootingResult",
    "launch_separatrix",
    "crossing_U0",
    "crossing_U1",
    "g_of_K",
    "find_K_star",
    "connection_distance",
    "solve_anomalous",
    "K_MIN",
    "K_MAX",
]

K_MIN, K_MAX = 1e-8, 1e8
P2_UV = (1.0, 0.0)

#: launch offset used for the connection itself; small so the assembled
#: orbit reaches deep into the asymptotic regimes at both ends
CONNECTION_OFFSET = 1e-12
CONNECTION_CONTROLS = IntegrationControls(rel_tol=1e-11, abs_tol=1e-30, max_step=0.02)


def _mirrored(params: ModelParams, mirrored: bool | None) -> bool:
    if params.regime is Regime.NO_ETERNAL:
        raise NoEternalSolutions(f"no eternal solutions for m={params.m} >= m_c={params.m_c}")
    if params.regime is Regime.SOBOLEV:
        raise DomainError("the Sobolev exponent is handled by the explicit stationary solution")
    expected = params.regime is Regime.HIGH_SUBCRITICAL
    if mirrored is None:
        return expected
    if mirrored != expected:
        raise DomainError(
            f"{'mirrored' if mirrored else 'direct'} shooting is not valid in regime {params.regime}")
    return mirrored


def _saddle_V(C_s: float, which: str) -> float:
    root = math.sqrt(C_s * C_s + 4.0)
    if C_s >= 0.0:
        v1 = -(C_s + root) / 2.0
        v0 = -1.0 / v1
    else:
        v0 = (-C_s + root) / 2.0
        v1 = -1.0 / v0
    return v0 if which == "l0" else v1


def _launch_point(vf: VectorField, m: float, which: str, offset: float):
    C_s, C_K = vf.coeffs["C_s"], vf.coeffs["C_K"]
    b = _saddle_V(C_s, which)
    # eigenvector of the eigenvalue C_m·b at (0, b); finite even when C_K = 0
    du, dv = m + b * b, m * b * b * C_K
    norm = math.hypot(du, dv)
    eps = offset * max(1.0, abs(b))
    start = (eps * du / norm, b + eps * dv / norm)
    return start, {"point_id": "P0" if which == "l0" else "P1",
                   "eigenvector": (du / norm, dv / norm), "offset": eps, "b": b}


def launch_separatrix(params: ModelParams, K: float, which: str, *,
                      mirrored: bool | None = None, offset: float = 1e-6,
                      controls: IntegrationControls | None = None,
                      stop_at_crossing: bool = True, extra_param: float | None = None) -> Orbit:
    """Integrate ``l0`` forward from P0 or ``l1`` backward from P1.

    By default the orbit stops at its first crossing of the U axis
    (downward for ``l0``, upward in backward time for ``l1``), on capture by
    ``P2 = (1, 0)``, on escape, or when the parameter span is exhausted.
    With ``stop_at_crossing=False`` crossings are only logged; the run then
    ends on capture or escape, or ``extra_param`` beyond the first crossing
    when that is given.

    Raises
    ------
    DomainError
        Outside the subcritical regimes, or if ``mirrored`` contradicts the
        regime.
    """
    if which not in ("l0", "l1"):
        raise ValueError("which must be 'l0' or 'l1'")
    mir = _mirrored(params, mirrored)
    vf = uv_field(params, K, mirrored=mir)
    ctl = controls or IntegrationControls()
    start, launch = _launch_point(vf, params.m, which, offset)
    launch.update(K=K, mirrored=mir, which=which)
    direction = 1 if which == "l0" else -1
    kind = EventKind.AXIS_CROSSING_DOWN if which == "l0" else EventKind.AXIS_CROSSING_UP
    targets = {"P2": P2_UV}
    if stop_at_crossing or extra_param is not None:
        orbit = integrate_orbit(vf, start, direction, ctl,
                                StopSet(crossings=frozenset({kind}), targets=targets),
                                variant=SystemVariant.UV.value, launch=launch)
        if stop_at_crossing or orbit.terminal is None or orbit.terminal.kind is not kind:
            return orbit
        ctl = ctl.with_(max_param=orbit.terminal.param + extra_param)
    return integrate_orbit(vf, start, direction, ctl, StopSet(targets=targets),
                           variant=SystemVariant.UV.value, launch=launch)


@dataclass(frozen=True)
class CrossingMeasure:
    """U coordinate of a separatrix on the U axis.

    ``status`` is ``finite``, ``infinite`` (``l0`` escapes before crossing;
    ``value`` is ``inf``) or ``from_P2`` (the orbit reaches P2 first;
    ``value`` is 1).
    """

    value: float
    status: str
    orbit: Orbit = field(repr=False)

    def __post_init__(self):
        if self.status not in ("finite", "infinite", "from_P2"):
            raise ValueError(f"unknown status {self.status}")


def _near_P2(state, tol: float = 1e-3) -> bool:
    return math.hypot(state[0] - 1.0, state[1]) < tol


def _measure_l0(orbit: Orbit) -> CrossingMeasure:
    ev = orbit.terminal
    if ev is None:
        raise ShootingError("l0 ended without an event")
    if ev.kind is EventKind.AXIS_CROSSING_DOWN:
        return CrossingMeasure(float(ev.state[0]), "finite", orbit)
    if ev.kind is EventKind.CAPTURED and ev.target == "P2":
        return CrossingMeasure(1.0, "from_P2", orbit)
    if ev.kind is EventKind.PARAM_EXHAUSTED and _near_P2(ev.state):
        return CrossingMeasure(1.0, "from_P2", orbit)
    if ev.kind is EventKind.ESCAPED:
        return CrossingMeasure(math.inf, "infinite", orbit)
    raise ShootingError(f"l0 ended with {ev.label} at {ev.state}")


def _measure_l1(orbit: Orbit) -> CrossingMeasure:
    """Classify a backward run of ``l1`` that was not stopped at crossings.

    An orbit whose backward limit is P2 comes from P2 (value 1), whatever
    crossings it makes on the way; otherwise the first crossing met in
    backward time is the last one before the orbit enters P1.
    """
    ev = orbit.terminal
    if ev is None:
        raise ShootingError("l1 ended without an event")
    if (ev.kind is EventKind.CAPTURED and ev.target == "P2") or (
            ev.kind is EventKind.PARAM_EXHAUSTED and _near_P2(ev.state)):
        return CrossingMeasure(1.0, "from_P2", orbit)
    crosses = orbit.crossings()
    if crosses:
        return CrossingMeasure(float(crosses[0].state[0]), "finite", orbit)
    raise ShootingError(f"l1 ended with {ev.label} at {ev.state} without crossing the U axis")


def crossing_U0(params: ModelParams, K: float, *, mirrored: bool | None = None,
                controls: IntegrationControls | None = None) -> CrossingMeasure:
    """First downward crossing of ``l0``; ``inf`` on escape, 1 if P2 comes first."""
    return _measure_l0(launch_separatrix(params, K, "l0", mirrored=mirrored,
                                         controls=controls))


def crossing_U1(params: ModelParams, K: float, *, mirrored: bool | None = None,
                controls: IntegrationControls | None = None) -> CrossingMeasure:
    """Last crossing of ``l1`` before P1, or 1 when ``l1`` comes from P2."""
    return _measure_l1(launch_separatrix(params, K, "l1", mirrored=mirrored,
                                         controls=controls, stop_at_crossing=False))


def g_of_K(params: ModelParams, K: float, *, mirrored: bool | None = None,
           controls: IntegrationControls | None = None) -> float:
    """``U0(K) - U1(K)``; ``inf`` when ``l0`` escapes before crossing."""
    U0 = crossing_U0(params, K, mirrored=mirrored, controls=controls)
    if U0.status == "infinite":
        return math.inf
    U1 = crossing_U1(params, K, mirrored=mirrored, controls=controls)
    return U0.value - U1.value


@dataclass
class ShootingResult:
    K_star: float
    exponents: ExponentPair
    connection: Orbit = field(repr=False)
    bracket_history: list
    residual: float
    mirrored: bool = False
    crossing_gap: float = 0.0
    bracket: tuple = ()

    def as_dict(self) -> dict:
        return {
            "K_star": self.K_star,
            "alpha": self.exponents.alpha,
            "beta": self.exponents.beta,
            "residual": self.residual,
            "crossing_gap": self.crossing_gap,
            "mirrored": self.mirrored,
            "bracket": list(self.bracket),
            "bracket_history": [[k, g] for k, g in self.bracket_history],
        }


def _bracket(g, K0: float, history: list) -> tuple[float, float]:
    K = K0
    gK = g(K)
    history.append((K, gK))
    if gK == 0.0:
        return K, K
    step = 2.0 if gK > 0 else 0.5
    while True:
        K_next = K * step
        if not K_MIN <= K_next <= K_MAX:
            raise BracketNotFound(
                f"g keeps its sign on [{min(K0, K):.3g}, {max(K0, K):.3g}]; "
                "the regime is probably wrong for this branch")
        g_next = g(K_next)
        history.append((K_next, g_next))
        if (g_next > 0) != (gK > 0) or g_next == 0.0:
            return (K, K_next) if step > 1 else (K_next, K)
        K, gK = K_next, g_next


def find_K_star(params: ModelParams, bracket_hint: tuple[float, float] | float | None = None,
                *, mirrored: bool | None = None, rel_width: float = 1e-10,
                controls: IntegrationControls | None = None) -> ShootingResult:
    """Locate the unique zero of ``g`` by geometric bracketing and bisection.

    ``bracket_hint`` is either a starting value for the ×2 / ÷2 expansion or
    a pair ``(K_lo, K_hi)`` with ``g(K_lo) > 0 > g(K_hi)``; an invalid pair
    falls back to expansion from its geometric mean.

    Raises
    ------
    BracketNotFound
        If no sign change is found in ``[1e-8, 1e8]``.
    """
    mir = _mirrored(params, mirrored)

    def g(K):
        return g_of_K(params, K, mirrored=mir, controls=controls)

    history: list = []
    lo = hi = None
    if isinstance(bracket_hint, (tuple, list)):
        a, b = sorted(float(x) for x in bracket_hint)
        ga, gb = g(a), g(b)
        history += [(a, ga), (b, gb)]
        if ga > 0 > gb:
            lo, hi = a, b
        else:
            bracket_hint = math.sqrt(a * b)
    if lo is None:
        start = 1.0 if bracket_hint is None else float(bracket_hint)
        lo, hi = _bracket(g, start, history)
    while hi / lo - 1.0 > rel_width:
        mid = math.sqrt(lo * hi)
        gm = g(mid)
        history.append((mid, gm))
        if gm == 0.0:
            lo = hi = mid
            break
        if gm > 0:
            lo = mid
        else:
            hi = mid
    K_star = math.sqrt(lo * hi)
    connection, gap = _assemble_connection(params, K_star, mir)
    residual = connection_distance(params, K_star, mirrored=mir)
    exps = exponents_from_K(params, K_star, -1 if mir else 1)
    return ShootingResult(K_star, exps, connection, history, residual, mir, gap, (lo, hi))


def _assemble_connection(params: ModelParams, K: float, mirrored: bool) -> tuple[Orbit, float]:
    """Join ``l0`` up to its crossing with ``l1`` from its crossing into P1.

    The result is expressed in the renormalized chart of the original
    (unmirrored) equation, parametrized by increasing η̄ from P0 to P1.
    """
    ctl = CONNECTION_CONTROLS.with_(max_param=400.0)
    l0 = launch_separatrix(params, K, "l0", mirrored=mirrored, offset=CONNECTION_OFFSET,
                           controls=ctl)
    l1 = launch_separatrix(params, K, "l1", mirrored=mirrored, offset=CONNECTION_OFFSET,
                           controls=ctl)
    e0, e1 = l0.terminal, l1.terminal
    if e0.kind is not EventKind.AXIS_CROSSING_DOWN or e1.kind is not EventKind.AXIS_CROSSING_UP:
        raise ShootingError(f"separatrices at K={K:.17g} do not reach the U axis "
                            f"({e0.label}, {e1.label})")
    conn = Orbit.concatenate(l0, l1.reversed(), variant=SystemVariant.UV.value)
    if mirrored:
        conn = conn.reversed()
        conn.y[:, 1] *= -1.0
        conn.yp[:, 1] *= -1.0
    conn.launch.update(K=K, mirrored=mirrored)
    return conn, abs(e0.state[0] - e1.state[0])


def _distance_to_orbit(points: np.ndarray, orbit: Orbit, lo: float, hi: float):
    """Distance from each point to ``orbit`` restricted to ``lo <= tau <= hi``.

    Returns the distances and a mask of points whose closest parameter lies
    strictly inside the window.
    """
    sel = (orbit.t >= lo) & (orbit.t <= hi)
    knots = np.concatenate([[lo], orbit.t[sel], [hi]])
    knots = np.unique(np.concatenate([knots, 0.5 * (knots[1:] + knots[:-1])]))
    ref = orbit.dense(knots)
    _, idx = cKDTree(ref).query(points)
    a = knots[np.maximum(idx - 1, 0)]
    b = knots[np.minimum(idx + 1, len(knots) - 1)]

    def dist2(tau):
        d = orbit.dense(tau) - points
        return np.einsum("ij,ij->i", d, d)

    # ternary search; the bracket holds one local minimum for well-sampled orbits
    for _ in range(90):
        c = a + (b - a) / 3.0
        d = b - (b - a) / 3.0
        left = dist2(c) < dist2(d)
        b = np.where(left, d, b)
        a = np.where(left, a, c)
    tau = 0.5 * (a + b)
    span = hi - lo
    inner = (tau > lo + 1e-9 * span) & (tau < hi - 1e-9 * span)
    return np.sqrt(dist2(tau)), inner


def connection_distance(params: ModelParams, K: float, *, mirrored: bool | None = None,
                        window: float = 0.5) -> float:
    """Hausdorff-type distance between ``l0`` and ``l1`` around their crossings.

    Both separatrices are continued ``window`` beyond their first crossing;
    the distance is the largest gap from a sample on one curve to the other
    curve, taken over the stretch where the curves overlap.
    """
    mir = _mirrored(params, mirrored)
    ctl = IntegrationControls(max_step=0.02)
    orbits, windows = [], []
    for which in ("l0", "l1"):
        orb = launch_separatrix(params, K, which, mirrored=mir, controls=ctl,
                                stop_at_crossing=False, extra_param=window)
        crosses = orb.crossings()
        if not crosses:
            return math.inf
        tc = crosses[0].param
        orbits.append(orb)
        windows.append((max(orb.t[0], tc - window), min(orb.t[-1], tc + window)))
    worst = 0.0
    for (pa, wa), (pb, wb) in (((orbits[0], windows[0]), (orbits[1], windows[1])),
                               ((orbits[1], windows[1]), (orbits[0], windows[0]))):
        sel = (pa.t >= wa[0]) & (pa.t <= wa[1])
        t = pa.t[sel]
        t = np.concatenate([t, 0.5 * (t[1:] + t[:-1])])
        d, inner = _distance_to_orbit(pa.dense(t), pb, *wb)
        if inner.any():
            worst = max(worst, float(d[inner].max()))
    return worst


def solve_anomalous(params: ModelParams, *, controls: IntegrationControls | None = None,
                    bracket_hint=None):
    """The eternal self-similar solution for ``params``.

    ``m < m_s``: direct shooting (α > 0); ``m_s < m < m_c``: mirrored
    shooting (α < 0); ``m = m_s``: the explicit stationary solution.

    Raises
    ------
    NoEternalSolutions
        For ``m >= m_c``.
    """
    from .explicit import stationary_sobolev
    from .profiles import EternalSolution, Profile, reconstruct_profile

    if params.regime is Regime.NO_ETERNAL:
        raise NoEternalSolutions(f"no eternal solutions for m={params.m} >= m_c={params.m_c}")
    if params.regime is Regime.SOBOLEV:
        rf = stationary_sobolev(params.N, params.p, 1.0)
        # normalize f(0) = 1 through the scaling group f -> λ f(λ^k ξ)
        lam = 1.0 / float(rf.f(0.0))
        k = (params.p - params.m) / (params.sigma + 2.0)
        mu = lam ** k
        prof = Profile.from_function(lambda x: lam * rf.f(mu * np.asarray(x)),
                                     lambda x: lam * mu * rf.df(mu * np.asarray(x)))
        return EternalSolution(params, ExponentPair(0.0, 0.0), prof, None)
    res = find_K_star(params, bracket_hint, controls=controls)
    prof = reconstruct_profile(res.connection, params, res.exponents)
    return EternalSolution(params, res.exponents, prof, res)
