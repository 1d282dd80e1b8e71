"""Adaptive Runge–Kutta integration of planar fields with event detection.

The stepper is the Dormand–Prince 5(4) pair with a PI step-size controller,
specialised to two scalar components so the inner loop runs on Python
floats.  Backward integration negates the field; the integration parameter
``tau`` always increases and ``Orbit.direction`` records the orientation.

Dense output between accepted samples is cubic Hermite on the stored states
and field values (local error O(h^4)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import BracketLost, StepFailure

__all__ = [
    "PlanarField",
    "IntegrationControls",
    "EventKind",
    "OrbitEvent",
    "StopSet",
    "Orbit",
    "integrate_orbit",
    "refine_event",
    "hermite",
]

PlanarField = Callable[[float, float], "tuple[float, float]"]

# Dormand–Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                                22 / 525, -1 / 40)

_SAFETY = 0.9
_BETA1 = 0.7 / 5.0
_BETA2 = 0.4 / 5.0
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


@dataclass(frozen=True)
class IntegrationControls:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 0.5
    max_param: float = 200.0
    u_escape: float = 1e6
    capture_radius: float = 1e-6
    first_step: float | None = None

    def __post_init__(self) -> None:
        for name in ("rel_tol", "abs_tol", "max_step", "max_param", "u_escape",
                     "capture_radius"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.rel_tol < 1e-14:
            raise ValueError("rel_tol below 1e-14 is not meaningful in double precision")

    def with_(self, **changes) -> "IntegrationControls":
        return replace(self, **changes)


class EventKind(str, Enum):
    AXIS_CROSSING_DOWN = "axis_crossing_down"
    AXIS_CROSSING_UP = "axis_crossing_up"
    CAPTURED = "captured"
    ESCAPED = "escaped"
    PARAM_EXHAUSTED = "param_exhausted"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class OrbitEvent:
    """An event along an orbit.

    Crossing kinds refer to the sign change of the second coordinate with
    increasing integration parameter; ``index`` counts crossings from 0.
    """

    kind: EventKind
    param: float
    state: tuple[float, float]
    target: str | None = None
    index: int | None = None
    bracket: tuple[int, int] | None = None

    @property
    def label(self) -> str:
        if self.kind is EventKind.CAPTURED:
            return f"captured_by_{self.target}"
        return self.kind.value


@dataclass(frozen=True)
class StopSet:
    """Which events terminate an integration.

    ``crossings`` lists the crossing kinds that stop the run (all crossings
    are logged either way); ``targets`` are capture points by name.
    """

    crossings: frozenset = frozenset()
    targets: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    escape: bool = True


def hermite(t0, t1, y0, y1, d0, d1, t):
    """Cubic Hermite interpolation; works elementwise on arrays."""
    h = t1 - t0
    s = (t - t0) / h
    s2 = s * s
    s3 = s2 * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1


@dataclass
class Orbit:
    """A sampled trajectory ``tau -> (u, v)`` with its event log.

    ``t`` is strictly increasing; ``yp`` holds d(u, v)/dtau at each sample
    (the field in the direction of integration).
    """

    t: np.ndarray
    y: np.ndarray
    yp: np.ndarray
    events: list[OrbitEvent] = field(default_factory=list)
    direction: int = 1
    variant: str | None = None
    launch: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def u(self) -> np.ndarray:
        return self.y[:, 0]

    @property
    def v(self) -> np.ndarray:
        return self.y[:, 1]

    @property
    def eta(self) -> np.ndarray:
        """Parameter of the underlying (unnegated) field."""
        return self.direction * self.t

    @property
    def end(self) -> tuple[float, float]:
        return float(self.y[-1, 0]), float(self.y[-1, 1])

    @property
    def terminal(self) -> OrbitEvent | None:
        return self.events[-1] if self.events else None

    def crossings(self) -> list[OrbitEvent]:
        return [e for e in self.events
                if e.kind in (EventKind.AXIS_CROSSING_DOWN, EventKind.AXIS_CROSSING_UP)]

    def dense(self, tau):
        """Interpolated state(s) at parameter value(s) ``tau``; shape (..., 2)."""
        tau_arr = np.asarray(tau, dtype=float)
        flat = np.atleast_1d(tau_arr)
        if flat.size and (flat.min() < self.t[0] - 1e-12 or flat.max() > self.t[-1] + 1e-12):
            raise ValueError("dense output requested outside the sampled range")
        idx = np.clip(np.searchsorted(self.t, flat, side="right") - 1, 0, len(self.t) - 2)
        t0, t1 = self.t[idx], self.t[idx + 1]
        out = hermite(t0[:, None], t1[:, None], self.y[idx], self.y[idx + 1],
                      self.yp[idx], self.yp[idx + 1], flat[:, None])
        return out.reshape(tau_arr.shape + (2,))

    def reversed(self) -> "Orbit":
        """Same curve traversed backwards, reparametrised by ``t_end - tau``."""
        T = self.t[-1]
        return Orbit(
            t=(T - self.t[::-1]).copy(),
            y=self.y[::-1].copy(),
            yp=-self.yp[::-1],
            events=[],
            direction=-self.direction,
            variant=self.variant,
            launch=dict(self.launch),
        )

    @staticmethod
    def concatenate(first: "Orbit", second: "Orbit", variant: str | None = None) -> "Orbit":
        """Join two orbits; ``second`` is shifted to start where ``first`` ends."""
        shift = first.t[-1] - second.t[0]
        t = np.concatenate([first.t, second.t[1:] + shift])
        y = np.vstack([first.y, second.y[1:]])
        yp = np.vstack([first.yp, second.yp[1:]])
        return Orbit(t, y, yp, [], first.direction, variant or first.variant,
                     {"pieces": [first.launch, second.launch], "joint": float(first.t[-1])})


def _initial_step(fn, y0, f0, rtol, atol):
    sc0 = atol + rtol * abs(y0[0])
    sc1 = atol + rtol * abs(y0[1])
    d0 = math.hypot(y0[0] / sc0, y0[1] / sc1) / math.sqrt(2.0)
    d1 = math.hypot(f0[0] / sc0, f0[1] / sc1) / math.sqrt(2.0)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    u1 = y0[0] + h0 * f0[0]
    v1 = y0[1] + h0 * f0[1]
    f1 = fn(u1, v1)
    d2 = math.hypot((f1[0] - f0[0]) / sc0, (f1[1] - f0[1]) / sc1) / math.sqrt(2.0) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1)


def _bisect(fn_v: Callable[[float], float], a: float, b: float, va: float, vb: float) -> float:
    """Locate a sign change of ``fn_v`` in [a, b] to machine resolution."""
    for _ in range(200):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        vm = fn_v(mid)
        if vm == 0.0:
            return mid
        if (vm > 0.0) == (va > 0.0):
            a, va = mid, vm
        else:
            b, vb = mid, vm
    return a if abs(va) <= abs(vb) else b


def integrate_orbit(
    fn: PlanarField,
    start: Sequence[float],
    direction: int = 1,
    controls: IntegrationControls | None = None,
    stop: StopSet | None = None,
    *,
    variant: str | None = None,
    launch: dict | None = None,
) -> Orbit:
    """Integrate ``(u, v)' = ±fn(u, v)`` from ``start`` until a stop event.

    Every sign change of ``v`` between accepted steps is logged as a
    crossing event refined by bisection on the dense output.  The run
    terminates on the first crossing whose kind is in ``stop.crossings``,
    on capture by a target, on escape, or when ``max_param`` is exhausted.

    Raises
    ------
    StepFailure
        If the step size underflows.
    """
    ctl = controls or IntegrationControls()
    stop = stop or StopSet()
    if direction not in (1, -1):
        raise ValueError("direction must be +1 or -1")
    if start[0] < 0.0:
        raise ValueError("start must satisfy u >= 0")
    if direction == 1:
        f = fn
    else:
        def f(u, v, _fn=fn):
            a, b = _fn(u, v)
            return -a, -b

    rtol, atol = ctl.rel_tol, ctl.abs_tol
    u, v = float(start[0]), float(start[1])
    ku, kv = f(u, v)
    ts, us, vs, dus, dvs = [0.0], [u], [v], [ku], [kv]
    events: list[OrbitEvent] = []
    targets = dict(stop.targets)

    def finish(ev: OrbitEvent | None = None) -> Orbit:
        if ev is not None:
            events.append(ev)
        return Orbit(
            t=np.array(ts),
            y=np.column_stack([us, vs]),
            yp=np.column_stack([dus, dvs]),
            events=events,
            direction=direction,
            variant=variant,
            launch=dict(launch or {}),
        )

    for name, (pu, pv) in targets.items():
        if math.hypot(u - pu, v - pv) < ctl.capture_radius:
            return _single_point(finish, u, v, ku, kv, name)
    if ku == 0.0 and kv == 0.0:
        return _single_point(finish, u, v, ku, kv, "equilibrium")

    h = ctl.first_step or _initial_step(f, (u, v), (ku, kv), rtol, atol)
    h = min(h, ctl.max_step)
    t = 0.0
    err_prev = 1e-4
    n_cross = 0
    rejected = False

    while True:
        if t >= ctl.max_param:
            return finish(OrbitEvent(EventKind.PARAM_EXHAUSTED, t, (u, v)))
        h = min(h, ctl.max_param - t, ctl.max_step)
        if h < 1e-14 * max(1.0, abs(t)):
            raise StepFailure("step size underflow", t, (u, v))

        k1u, k1v = ku, kv
        k2u, k2v = f(u + h * _A21 * k1u, v + h * _A21 * k1v)
        k3u, k3v = f(u + h * (_A31 * k1u + _A32 * k2u), v + h * (_A31 * k1v + _A32 * k2v))
        k4u, k4v = f(u + h * (_A41 * k1u + _A42 * k2u + _A43 * k3u),
                     v + h * (_A41 * k1v + _A42 * k2v + _A43 * k3v))
        k5u, k5v = f(u + h * (_A51 * k1u + _A52 * k2u + _A53 * k3u + _A54 * k4u),
                     v + h * (_A51 * k1v + _A52 * k2v + _A53 * k3v + _A54 * k4v))
        k6u, k6v = f(u + h * (_A61 * k1u + _A62 * k2u + _A63 * k3u + _A64 * k4u + _A65 * k5u),
                     v + h * (_A61 * k1v + _A62 * k2v + _A63 * k3v + _A64 * k4v + _A65 * k5v))
        un = u + h * (_B1 * k1u + _B3 * k3u + _B4 * k4u + _B5 * k5u + _B6 * k6u)
        vn = v + h * (_B1 * k1v + _B3 * k3v + _B4 * k4v + _B5 * k5v + _B6 * k6v)
        if not (math.isfinite(un) and math.isfinite(vn)):
            h *= _MIN_FACTOR
            rejected = True
            continue
        if un < 0.0 and u >= 0.0:
            # the axis u = 0 is invariant; overshooting it means the step is too long
            h *= 0.5
            rejected = True
            continue
        k7u, k7v = f(un, vn)
        eu = h * (_E1 * k1u + _E3 * k3u + _E4 * k4u + _E5 * k5u + _E6 * k6u + _E7 * k7u)
        ev = h * (_E1 * k1v + _E3 * k3v + _E4 * k4v + _E5 * k5v + _E6 * k6v + _E7 * k7v)
        su = atol + rtol * max(abs(u), abs(un))
        sv = atol + rtol * max(abs(v), abs(vn))
        err = math.sqrt(0.5 * ((eu / su) ** 2 + (ev / sv) ** 2))
        if not math.isfinite(err):
            h *= _MIN_FACTOR
            rejected = True
            continue
        if err > 1.0:
            h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)
            rejected = True
            continue

        # accepted
        t_old, u_old, v_old, ku_old, kv_old = t, u, v, ku, kv
        t += h
        u, v, ku, kv = un, vn, k7u, k7v
        ts.append(t)
        us.append(u)
        vs.append(v)
        dus.append(ku)
        dvs.append(kv)

        if err == 0.0:
            factor = _MAX_FACTOR
        else:
            factor = _SAFETY * err ** -_BETA1 * err_prev ** _BETA2
            factor = min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
        if rejected:
            factor = min(factor, 1.0)
        rejected = False
        err_prev = max(err, 1e-4)
        h *= factor

        if (v_old > 0.0 and v <= 0.0) or (v_old < 0.0 and v >= 0.0):
            kind = EventKind.AXIS_CROSSING_DOWN if v_old > 0.0 else EventKind.AXIS_CROSSING_UP
            if v == 0.0:
                tc = t
            else:
                def vfun(s, a=(t_old, t, u_old, u, ku_old, ku), b=(t_old, t, v_old, v, kv_old, kv)):
                    return hermite(b[0], b[1], b[2], b[3], b[4], b[5], s)
                tc = _bisect(vfun, t_old, t, v_old, v)
            uc = hermite(t_old, t, u_old, u, ku_old, ku, tc)
            vc = hermite(t_old, t, v_old, v, kv_old, kv, tc)
            n = len(ts) - 1
            cross = OrbitEvent(kind, tc, (uc, vc), index=n_cross, bracket=(n - 1, n))
            n_cross += 1
            if kind in stop.crossings:
                # end the orbit exactly on the crossing
                if tc <= ts[-2]:
                    for arr in (ts, us, vs, dus, dvs):
                        arr.pop()
                elif tc < t:
                    ts[-1], us[-1], vs[-1] = tc, uc, vc
                    dus[-1], dvs[-1] = f(uc, vc)
                return finish(replace(cross, bracket=None))
            events.append(cross)

        for name, (pu, pv) in targets.items():
            if math.hypot(u - pu, v - pv) < ctl.capture_radius:
                return finish(OrbitEvent(EventKind.CAPTURED, t, (u, v), target=name))
        if stop.escape and (abs(u) > ctl.u_escape or abs(v) > ctl.u_escape):
            return finish(OrbitEvent(EventKind.ESCAPED, t, (u, v)))


def _single_point(finish, u, v, ku, kv, name):
    orbit = finish(OrbitEvent(EventKind.CAPTURED, 0.0, (u, v), target=name))
    return orbit


def refine_event(orbit: Orbit, event: OrbitEvent) -> OrbitEvent:
    """Re-locate a crossing event by bisection on the orbit's dense output.

    Non-crossing events are returned unchanged.

    Raises
    ------
    BracketLost
        If the bracketing samples no longer straddle a sign change.
    """
    if event.kind not in (EventKind.AXIS_CROSSING_DOWN, EventKind.AXIS_CROSSING_UP):
        return event
    if event.bracket is None:
        i = int(np.searchsorted(orbit.t, event.param)) - 1
        i0, i1 = max(i, 0), max(i, 0) + 1
    else:
        i0, i1 = event.bracket
    a, b = float(orbit.t[i0]), float(orbit.t[i1])
    va, vb = float(orbit.y[i0, 1]), float(orbit.y[i1, 1])
    if va == 0.0:
        return replace(event, param=a, state=(float(orbit.y[i0, 0]), 0.0))
    if vb == 0.0:
        return replace(event, param=b, state=(float(orbit.y[i1, 0]), 0.0))
    if (va > 0.0) == (vb > 0.0):
        raise BracketLost(f"no sign change of v between samples {i0} and {i1}")

    def vfun(s):
        return float(orbit.dense(s)[1])

    tc = _bisect(vfun, a, b, va, vb)
    uc, vc = (float(x) for x in orbit.dense(tc))
    return replace(event, param=tc, state=(uc, vc))
