"""Phase-plane systems for the profile equation and their critical points.

With ``X = m ξ² f^{m-1}/α``-type variables the profile equation becomes an
autonomous planar system.  Five variants are provided:

``XY_PLUS``
    the system for α > 0,
``XY_MINUS``
    the system for α < 0 (sign change of the linear ``X`` terms),
``UV``
    the renormalized system centred on ``P2 = (1, 0)``,
``UV_LIMIT``
    the same with ``C_K = 0`` (the K → ∞ limit),
``ROTATED_XW``
    the system in ``(X, W)`` with ``W = -Y + 2X/N``, only for ``m + p = 2``.

Fields are callables ``(u, v) -> (du, dv)`` on Python floats, with an
analytic Jacobian attached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, NotEquilibrium, Unsupported
from .params import ModelParams, C_s_coefficient, renormalized_coefficients

__all__ = [
    "SystemVariant",
    "PhasePoint",
    "VectorField",
    "CriticalPoint",
    "AsymptoticDescriptor",
    "FlowDiagnostics",
    "CLASSIFY_TOL",
    "MPP2_TOL",
    "vector_field",
    "uv_field",
    "uv_bis_field",
    "classify_eigenvalues",
    "finite_critical_points",
    "linearize_and_classify",
    "infinity_critical_points",
    "local_profile_behavior",
    "flow_diagnostics",
    "stable_node_predicate",
    "p2_uv_eigenvalues",
    "xy_from_uv",
    "uv_from_xy",
]

CLASSIFY_TOL = 1e-9
MPP2_TOL = 1e-12
EQUILIBRIUM_TOL = 1e-10


class SystemVariant(str, Enum):
    XY_PLUS = "XY_plus"
    XY_MINUS = "XY_minus"
    UV = "UV"
    UV_LIMIT = "UV_limit"
    ROTATED_XW = "RotatedXW"

    def __str__(self) -> str:
        return self.value


class PhasePoint(NamedTuple):
    u: float
    v: float


@dataclass(frozen=True)
class VectorField:
    """A planar polynomial-plus-power field with its Jacobian.

    ``fn`` and ``jac`` operate on scalars; calling the instance evaluates
    ``fn``.  ``coeffs`` records the constants the field was built from.
    """

    variant: SystemVariant
    fn: Callable[[float, float], tuple[float, float]]
    jac: Callable[[float, float], np.ndarray]
    coeffs: dict = field(default_factory=dict)

    def __call__(self, u: float, v: float) -> tuple[float, float]:
        return self.fn(u, v)

    def jacobian(self, u: float, v: float) -> np.ndarray:
        return self.jac(u, v)

    def residual(self, point) -> float:
        du, dv = self.fn(float(point[0]), float(point[1]))
        return math.hypot(du, dv)


def _pow(u: float, q: float) -> float:
    return u ** q if u > 0.0 else 0.0


def _xy_field(params: ModelParams, K: float, sign: int) -> VectorField:
    N, m = params.N, params.m
    q = params.power
    s = float(sign)

    def fn(X, Y):
        Xq = _pow(X, q)
        return (X * (2.0 + (1.0 - m) * Y),
                -m * Y * Y - (N - 2.0) * Y + s * X * (2.0 + (1.0 - m) * Y) - K * Xq)

    def jac(X, Y):
        Xq1 = _pow(X, q - 1.0)
        return np.array([
            [2.0 + (1.0 - m) * Y, (1.0 - m) * X],
            [s * (2.0 + (1.0 - m) * Y) - q * K * Xq1,
             -2.0 * m * Y - (N - 2.0) + s * (1.0 - m) * X],
        ])

    variant = SystemVariant.XY_PLUS if sign > 0 else SystemVariant.XY_MINUS
    return VectorField(variant, fn, jac, {"K": K, "q": q})


def _uv_field(C_m: float, C_s: float, C_K: float, q: float,
              variant: SystemVariant) -> VectorField:
    def fn(U, V):
        return (C_m * U * V, -V * V - C_s * V + 1.0 + C_K * U * V - _pow(U, q))

    def jac(U, V):
        return np.array([
            [C_m * V, C_m * U],
            [C_K * V - q * _pow(U, q - 1.0), -2.0 * V - C_s + C_K * U],
        ])

    return VectorField(variant, fn, jac, {"C_m": C_m, "C_s": C_s, "C_K": C_K, "q": q})


def _rotated_field(params: ModelParams, K: float) -> VectorField:
    N, m = params.N, params.m
    a_xw = (m - 1.0)
    a_xx = -2.0 * (m - 1.0) / N
    b_xw = -(N + 2.0) * (m - params.m_s) / N
    b_xx = (K * N * N + 2.0 * N * (m - params.m_c)) / (N * N)

    def fn(X, W):
        return (a_xw * X * W + a_xx * X * X + 2.0 * X,
                m * W * W - (N - 2.0) * W + b_xw * X * W + b_xx * X * X)

    def jac(X, W):
        return np.array([
            [a_xw * W + 2.0 * a_xx * X + 2.0, a_xw * X],
            [b_xw * W + 2.0 * b_xx * X, 2.0 * m * W - (N - 2.0) + b_xw * X],
        ])

    return VectorField(SystemVariant.ROTATED_XW, fn, jac, {"K": K})


def vector_field(variant: SystemVariant | str, params: ModelParams, K_or_CK: float,
                 *, C_s: float | None = None) -> VectorField:
    """Build the field of ``variant``.

    ``K_or_CK`` is ``K`` for the ``XY`` and rotated variants and ``C_K`` for
    ``UV`` (ignored for ``UV_LIMIT``).  ``C_s`` overrides the coefficient
    computed from ``(N, m)``; the mirrored reduction passes ``-C_s``.

    Raises
    ------
    DomainError
        If the rotated system is requested with ``m + p != 2`` or the
        renormalized one with ``m >= m_c``.
    """
    variant = SystemVariant(variant)
    if variant in (SystemVariant.XY_PLUS, SystemVariant.XY_MINUS):
        if not K_or_CK > 0.0:
            raise DomainError("K must be positive")
        return _xy_field(params, K_or_CK, 1 if variant is SystemVariant.XY_PLUS else -1)
    if variant is SystemVariant.ROTATED_XW:
        if abs(params.m + params.p - 2.0) > MPP2_TOL:
            raise DomainError("the rotated system requires m + p = 2")
        if not K_or_CK > 0.0:
            raise DomainError("K must be positive")
        return _rotated_field(params, K_or_CK)
    if params.m >= params.m_c:
        raise DomainError("the renormalized system needs m < m_c")
    cs = C_s_coefficient(params.N, params.m) if C_s is None else C_s
    C_m = (1.0 - params.m) / params.m
    if variant is SystemVariant.UV_LIMIT:
        return _uv_field(C_m, cs, 0.0, params.power, variant)
    if K_or_CK < 0.0:
        raise DomainError("C_K must be non-negative")
    return _uv_field(C_m, cs, K_or_CK, params.power, variant)


def uv_field(params: ModelParams, K: float, *, mirrored: bool = False) -> VectorField:
    """Renormalized field at shooting parameter ``K``.

    With ``mirrored`` the sign of ``C_s`` is flipped; this is the system in
    ``(U, -V)`` with reversed time obtained from the α < 0 equations.
    """
    co = renormalized_coefficients(params, K)
    return vector_field(SystemVariant.UV, params, co.C_K,
                        C_s=-co.C_s if mirrored else co.C_s)


def uv_bis_field(params: ModelParams, C_K: float) -> VectorField:
    """Renormalized form of the α < 0 system: the ``C_K`` term changes sign."""
    C_m = (1.0 - params.m) / params.m
    C_s = C_s_coefficient(params.N, params.m)
    q = params.power

    def fn(U, V):
        return (C_m * U * V, -V * V - C_s * V + 1.0 - C_K * U * V - _pow(U, q))

    def jac(U, V):
        return np.array([
            [C_m * V, C_m * U],
            [-C_K * V - q * _pow(U, q - 1.0), -2.0 * V - C_s - C_K * U],
        ])

    return VectorField(SystemVariant.UV, fn, jac, {"C_m": C_m, "C_s": C_s, "C_K": -C_K, "q": q})


def xy_from_uv(params: ModelParams, K: float, U, V):
    co = renormalized_coefficients(params, K)
    return co.X_P2 * np.asarray(U), (co.c * np.asarray(V) - 2.0) / (1.0 - params.m)


def uv_from_xy(params: ModelParams, K: float, X, Y):
    co = renormalized_coefficients(params, K)
    return np.asarray(X) / co.X_P2, ((1.0 - params.m) * np.asarray(Y) + 2.0) / co.c


# ---------------------------------------------------------------------------
# critical points

class Classification(str, Enum):
    SADDLE = "saddle"
    UNSTABLE_NODE = "unstable_node"
    STABLE_NODE = "stable_node"
    UNSTABLE_FOCUS = "unstable_focus"
    STABLE_FOCUS = "stable_focus"
    CENTER_OR_FOCUS = "center_or_focus"
    SADDLE_NODE = "saddle_node"

    def __str__(self) -> str:
        return self.value


def classify_eigenvalues(eigenvalues, tol: float = CLASSIFY_TOL) -> Classification:
    """Topological type from the two eigenvalues of a planar linearization."""
    l1, l2 = (complex(x) for x in eigenvalues)
    if abs(l1.imag) > tol or abs(l2.imag) > tol:
        re = l1.real
        if abs(re) < tol:
            return Classification.CENTER_OR_FOCUS
        return Classification.UNSTABLE_FOCUS if re > 0 else Classification.STABLE_FOCUS
    a, b = l1.real, l2.real
    if abs(a) < tol or abs(b) < tol:
        return Classification.SADDLE_NODE
    if a * b < 0:
        return Classification.SADDLE
    return Classification.UNSTABLE_NODE if a > 0 else Classification.STABLE_NODE


@dataclass
class CriticalPoint:
    """An equilibrium with its linearization.

    ``chart`` is ``finite`` for points in the ``XY``/``UV`` planes,
    ``poincare_equator`` for points at infinity given as a unit vector with
    zero third coordinate, and ``local_yw`` when the Jacobian is taken in
    the local chart ``y = Y/X`` near the equator.  Complex eigenvalues are
    stored as Python complex numbers.
    """

    id: str
    chart: str
    coords: tuple
    jacobian: np.ndarray | None = None
    eigenvalues: tuple | None = None
    eigenvectors: tuple | None = None
    classification: Classification | None = None
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        ev = self.eigenvalues or ()
        return {
            "id": self.id,
            "chart": self.chart,
            "coords": [float(c) for c in self.coords],
            "jacobian": None if self.jacobian is None else self.jacobian.tolist(),
            "eigenvalues": [[complex(e).real, complex(e).imag] for e in ev],
            "eigenvectors": None if self.eigenvectors is None else [
                [[complex(c).real, complex(c).imag] for c in vec] for vec in self.eigenvectors],
            "classification": None if self.classification is None else self.classification.value,
            "diagnostics": dict(self.diagnostics),
        }


def _eigen(J: np.ndarray) -> tuple[tuple, tuple]:
    w, vecs = np.linalg.eig(J)
    order = np.argsort(-w.real, kind="stable")
    vals, out = [], []
    for i in order:
        v = vecs[:, i]
        # normalise so that the first non-negligible component is 1
        k = 0 if abs(v[0]) > 1e-12 else 1
        v = v / v[k]
        lam = w[i]
        vals.append(float(lam.real) if abs(lam.imag) == 0.0 else complex(lam))
        out.append(tuple(float(c.real) if c.imag == 0 else complex(c) for c in v))
    return tuple(vals), tuple(out)


def linearize_and_classify(point: CriticalPoint, vf: VectorField) -> CriticalPoint:
    """Fill in Jacobian, eigenpairs and classification for a finite point.

    Raises
    ------
    NotEquilibrium
        If the field does not vanish at ``point.coords`` to 1e-10.
    """
    res = vf.residual(point.coords)
    if not res < EQUILIBRIUM_TOL:
        raise NotEquilibrium(f"{point.id} at {point.coords} has residual {res:.3e}")
    J = vf.jacobian(float(point.coords[0]), float(point.coords[1]))
    vals, vecs = _eigen(J)
    point.jacobian = J
    point.eigenvalues = vals
    point.eigenvectors = vecs
    point.classification = classify_eigenvalues(vals)
    point.diagnostics.setdefault("residual", res)
    return point


def _p2_diagnostics(params: ModelParams, X_P2: float) -> dict:
    N, m, p = params.N, params.m, params.p
    L = (m - 1.0) ** 2 * X_P2 + (N + 2.0) * (m - params.m_s)
    disc = L * L - 8.0 * N * (p - m) * (params.m_c - m)
    root = np.sqrt(complex(disc))
    lam = ((L + root) / (2.0 * (1.0 - m)), (L - root) / (2.0 * (1.0 - m)))
    return {"L": L, "discriminant": disc,
            "eigenvalues_closed_form": [[z.real, z.imag] for z in lam]}


def p2_uv_eigenvalues(params: ModelParams, C_K: float, C_s: float | None = None) -> tuple:
    """Closed-form eigenvalues of the renormalized system at ``(1, 0)``."""
    m, p = params.m, params.p
    cs = C_s_coefficient(params.N, m) if C_s is None else C_s
    s = m * (C_K - cs)
    root = np.sqrt(complex(s * s - 4.0 * m * (p - m)))
    return ((s + root) / (2.0 * m), (s - root) / (2.0 * m))


def finite_critical_points(params: ModelParams, K: float,
                           variant: SystemVariant | str = SystemVariant.XY_PLUS,
                           *, C_s: float | None = None) -> list[CriticalPoint]:
    """P0, P1 and (for m < m_c) P2 in the chart of ``variant``, linearized.

    For the ``UV`` variants ``K`` is still the shooting parameter; ``C_K`` is
    derived from it (and set to 0 for ``UV_LIMIT``).
    """
    variant = SystemVariant(variant)
    N, m = params.N, params.m
    if variant in (SystemVariant.XY_PLUS, SystemVariant.XY_MINUS):
        vf = vector_field(variant, params, K)
        pts = [CriticalPoint("P0", "finite", (0.0, 0.0)),
               CriticalPoint("P1", "finite", (0.0, -(N - 2.0) / m))]
        if m < params.m_c:
            X2 = renormalized_coefficients(params, K).X_P2
            p2 = CriticalPoint("P2", "finite", (X2, -2.0 / (1.0 - m)))
            p2.diagnostics.update(_p2_diagnostics(params, X2))
            pts.append(p2)
    elif variant is SystemVariant.ROTATED_XW:
        vf = vector_field(variant, params, K)
        pts = [CriticalPoint("P0", "finite", (0.0, 0.0)),
               CriticalPoint("P1", "finite", (0.0, (N - 2.0) / m))]
        if m < params.m_c:
            X2 = renormalized_coefficients(params, K).X_P2
            pts.append(CriticalPoint("P2", "finite", (X2, 2.0 / (1.0 - m) + 2.0 * X2 / N)))
    else:
        co = renormalized_coefficients(params, K)
        cs = co.C_s if C_s is None else C_s
        C_K = 0.0 if variant is SystemVariant.UV_LIMIT else co.C_K
        vf = vector_field(variant, params, C_K, C_s=cs)
        root = math.sqrt(cs * cs + 4.0)
        # stable evaluation of (-C_s ± root)/2: the product of the roots is -1
        if cs >= 0.0:
            v1 = -(cs + root) / 2.0
            v0 = -1.0 / v1
        else:
            v0 = (-cs + root) / 2.0
            v1 = -1.0 / v0
        pts = [CriticalPoint("P0", "finite", (0.0, v0)),
               CriticalPoint("P1", "finite", (0.0, v1)),
               CriticalPoint("P2", "finite", (1.0, 0.0))]
        lam = p2_uv_eigenvalues(params, C_K, cs)
        pts[2].diagnostics["eigenvalues_closed_form"] = [[z.real, z.imag] for z in lam]
    for pt in pts:
        linearize_and_classify(pt, vf)
    return pts


def _equator(y: float) -> tuple[float, float, float]:
    r = math.sqrt(1.0 + y * y)
    return (1.0 / r, y / r, 0.0)


def _filled(pid: str, chart: str, coords, J: np.ndarray, **diag) -> CriticalPoint:
    vals, vecs = _eigen(J)
    return CriticalPoint(pid, chart, tuple(coords), J, vals, vecs,
                         classify_eigenvalues(vals), dict(diag))


def infinity_critical_points(params: ModelParams, K: float) -> list[CriticalPoint]:
    """Critical points on the equator of the Poincaré sphere.

    ``Q2 = (0, 1, 0)`` and ``Q3 = (0, -1, 0)`` always exist; their Jacobians
    are the leading-order linearizations in the chart ``x = X/Y`` with time
    oriented as in the finite plane.  ``Q1`` and ``Q4`` exist for
    ``m + p <= 2``; for ``m + p < 2`` they are analysed in the local
    ``(y, w)`` chart, for ``m + p = 2`` in ``(y, z) = (Y/X, 1/X)``, where
    they sit at the roots of ``y² - (1-m) y + K = 0`` when those are real.
    ``Q1`` is always the smaller root, so that it keeps being the point
    with a one-dimensional stable set from the finite plane.
    """
    m, p, N = params.m, params.p, params.N
    one_m = 1.0 - m
    pts = [
        _filled("Q2", "poincare_equator", (0.0, 1.0, 0.0), np.diag([1.0, m])),
        _filled("Q3", "poincare_equator", (0.0, -1.0, 0.0), -np.diag([1.0, m])),
    ]
    s = m + p - 2.0
    if abs(s) <= MPP2_TOL:
        disc = one_m * one_m - 4.0 * K
        if disc < 0.0:
            return pts
        r = math.sqrt(disc)
        y_hi = (one_m + r) / 2.0
        y_lo = K / y_hi  # product of the roots is K
        for pid, y in (("Q1", y_lo), ("Q4", y_hi)):
            J = np.array([[one_m - 2.0 * y, 2.0 - N * y], [0.0, -one_m * y]])
            pts.append(_filled(pid, "local_yw", _equator(y), J, y=y, local_chart="y=Y/X, z=1/X"))
        return pts
    if s < 0.0:
        pts.append(_filled("Q1", "local_yw", (1.0, 0.0, 0.0),
                           np.array([[one_m, -K], [0.0, 0.0]]), y=0.0,
                           local_chart="y=Y/X, w=(1/X)^((2-m-p)/(1-m))"))
        pts.append(_filled("Q4", "local_yw", _equator(one_m),
                           np.array([[-one_m, -K], [0.0, one_m * s]]), y=one_m,
                           local_chart="y=Y/X, w=(1/X)^((2-m-p)/(1-m))"))
    return pts


def stable_node_predicate(params: ModelParams) -> bool:
    """Necessary condition for P2 to become a stable node for large K."""
    N, m, p = params.N, params.m, params.p
    return (m - 1.0) ** 2 * (N - 2.0) ** 2 - 8.0 * N * p * (params.m_c - m) >= 0.0


# ---------------------------------------------------------------------------
# profile behaviour near critical points

@dataclass(frozen=True)
class AsymptoticDescriptor:
    """Local profile behaviour ``f ~ C·(·)^exponent`` along orbits through a point."""

    kind: str
    exponent: float
    limit_direction: str


def local_profile_behavior(point: CriticalPoint | str, direction: str,
                           params: ModelParams) -> AsymptoticDescriptor:
    """Behaviour of profiles on orbits leaving (``out``) or entering (``in``) a point.

    Raises
    ------
    Unsupported
        For pairs that carry no profile, e.g. orbits entering P0 from the
        interior or leaving the saddle P1.
    """
    pid = point if isinstance(point, str) else point.id
    if direction not in ("in", "out"):
        raise ValueError("direction must be 'in' or 'out'")
    m, N = params.m, params.N
    table = {
        ("P0", "out"): ("regular_origin", 0.0, "xi_to_0"),
        ("P1", "in"): ("tail_P1", -(N - 2.0) / m, "xi_to_infinity"),
        ("P2", "out"): ("vertical_asymptote_origin_P2", -2.0 / (1.0 - m), "xi_to_0"),
        ("P2", "in"): ("tail_P2", -2.0 / (1.0 - m), "xi_to_infinity"),
        ("Q2", "out"): ("sign_change_Q2Q3", 1.0 / m, "xi_to_finite"),
        ("Q3", "in"): ("sign_change_Q2Q3", 1.0 / m, "xi_to_finite"),
        ("Q1", "in"): ("asymptote_Q1Q4", -1.0 / (1.0 - m), "xi_to_finite"),
        ("Q4", "in"): ("asymptote_Q1Q4", -1.0 / (1.0 - m), "xi_to_finite"),
    }
    try:
        return AsymptoticDescriptor(*table[(pid, direction)])
    except KeyError:
        raise Unsupported(f"no profile behaviour for orbits going {direction} of {pid}") from None


# ---------------------------------------------------------------------------
# flow diagnostics

@dataclass(frozen=True)
class FlowDiagnostics:
    """Sign indicators used in the small-K and monotonicity arguments.

    ``axis_sign(U)``: direction of the renormalized flow across the U axis.
    ``line_F(X)``: flow of the α > 0 system across the line of slope one
    through P2 (positive means right to left is impossible).
    ``isocline_G(X, Y)``: flow across the isocline ``dY = 0``.
    """

    axis_sign: Callable[[float], float]
    line_F: Callable[[float], float]
    isocline_G: Callable[[float, float], float]
    A_P2: float


def flow_diagnostics(params: ModelParams, K: float) -> FlowDiagnostics:
    if params.m >= params.m_c:
        raise DomainError("flow diagnostics need m < m_c")
    N, m, p = params.N, params.m, params.p
    q = params.power
    X2 = renormalized_coefficients(params, K).X_P2
    gap = N * (params.m_c - m)
    A = m * (m - 1.0) ** 2 * X2 * X2 + (1.0 - m) * (N + 2.0) * (m - params.m_s) * X2 - 2.0 * gap
    lin = (2.0 * m * (1.0 - m) * X2 + (N + 2.0) * (m - params.m_s)) / (m - 1.0)

    def axis_sign(U: float) -> float:
        return float(np.sign(1.0 - U ** q))

    def line_F(X: float) -> float:
        return (m * X * X + lin * X + 2.0 * gap / (m - 1.0) ** 2 * (X / X2) ** q
                + A / (m - 1.0) ** 2)

    def isocline_G(X: float, Y: float) -> float:
        w = 2.0 + (1.0 - m) * Y
        return X * w * w - K * (p - m) / (1.0 - m) * w * X ** q

    return FlowDiagnostics(axis_sign, line_F, isocline_G, A)
