import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anomalous.errors import DomainError, NotEquilibrium, Unsupported
from anomalous.params import derive_params, renormalized_coefficients
from anomalous.phaseplane import (Classification, CriticalPoint, SystemVariant, classify_eigenvalues,
                                  finite_critical_points, flow_diagnostics,
                                  infinity_critical_points, linearize_and_classify,
                                  local_profile_behavior, p2_uv_eigenvalues, stable_node_predicate,
                                  uv_bis_field, uv_field, uv_from_xy, vector_field, xy_from_uv)

LOW = derive_params(3, 0.1, 2)
HIGH = derive_params(3, 4 / 15, 2)
Ks = st.floats(0.05, 20.0)
Ns = st.integers(3, 9)


def fd_jacobian(vf, u, v, h=1e-6):
    """Central differences; one-sided in ``u`` on the invariant axis ``u = 0``."""
    J = np.empty((2, 2))
    if u == 0.0:
        f0, f1, f2 = (np.array(vf(k * h, v)) for k in (0, 1, 2))
        J[:, 0] = (-3 * f0 + 4 * f1 - f2) / (2 * h)
    else:
        J[:, 0] = (np.array(vf(u + h, v)) - np.array(vf(u - h, v))) / (2 * h)
    J[:, 1] = (np.array(vf(u, v + h)) - np.array(vf(u, v - h))) / (2 * h)
    return J


def test_field_examples():
    assert vector_field("XY_plus", LOW, 1.0)(0.0, 0.0) == (0.0, 0.0)
    for C_K in (0.0, 0.3, 7.0):
        assert vector_field(SystemVariant.UV, LOW, C_K)(1.0, 0.0) == pytest.approx((0.0, 0.0), abs=1e-15)
    sob = derive_params(3, 0.2, 2)
    assert vector_field("UV_limit", sob, 0.0, C_s=0.0)(0.0, 1.0) == (0.0, 0.0)


@given(st.floats(0.0, 3.0), st.floats(-3.0, 3.0))
def test_uv_with_zero_CK_is_limit(U, V):
    a = vector_field("UV", LOW, 0.0)(U, V)
    b = vector_field("UV_limit", LOW, 5.0)(U, V)
    assert a == b


def test_variant_mismatch():
    with pytest.raises(DomainError):
        vector_field("RotatedXW", LOW, 1.0)
    with pytest.raises(DomainError):
        vector_field("UV", derive_params(3, 0.5, 2), 1.0)
    with pytest.raises(DomainError):
        vector_field("UV", LOW, -1.0)
    with pytest.raises(DomainError):
        vector_field("XY_plus", LOW, 0.0)
    vector_field("RotatedXW", derive_params(7, 0.1, 1.9), 1.0)


def test_finite_points_examples():
    pts = {p.id: p for p in finite_critical_points(LOW, 1.0)}
    assert pts["P1"].coords == (0.0, -10.0)
    X2 = (2 * 3 * (1 / 3 - 0.1) / 0.81) ** (0.9 / 1.9)
    assert pts["P2"].coords == pytest.approx((X2, -20 / 9), rel=1e-14)
    assert pts["P0"].eigenvalues == pytest.approx((2.0, -1.0))
    assert pts["P0"].eigenvectors[0] == pytest.approx((1.0, 2 / 3))
    assert pts["P0"].eigenvectors[1] == pytest.approx((0.0, 1.0))
    assert pts["P0"].classification is Classification.SADDLE
    assert sorted(pts["P1"].eigenvalues) == pytest.approx([-7.0, 1.0])
    assert pts["P1"].classification is Classification.SADDLE
    lim = {p.id: p for p in finite_critical_points(derive_params(3, 0.2, 2), 1.0, "UV_limit", C_s=0.0)}
    assert lim["P0"].coords == (0.0, 1.0)
    assert lim["P1"].coords == (0.0, -1.0)


@pytest.mark.parametrize("m", [0.21, 0.25, 0.3, 0.33])
@pytest.mark.parametrize("K", [1e-3, 0.1, 1.0, 10.0, 1e3])
def test_P2_unstable_above_m_s(m, K):
    P2 = finite_critical_points(derive_params(3, m, 2), K)[2]
    assert P2.classification in (Classification.UNSTABLE_NODE, Classification.UNSTABLE_FOCUS)


def test_P2_small_K_node_large_K_stable():
    assert finite_critical_points(LOW, 1e-3)[2].classification is Classification.UNSTABLE_NODE
    assert finite_critical_points(LOW, 1.0)[2].classification is Classification.UNSTABLE_FOCUS
    big = finite_critical_points(LOW, 100.0)[2].classification
    assert big in (Classification.STABLE_FOCUS, Classification.STABLE_NODE)


def test_P2_closed_form_eigenvalues_xy():
    P2 = finite_critical_points(LOW, 1.0)[2]
    key = lambda z: (z.real, z.imag)
    closed = sorted((complex(a, b) for a, b in P2.diagnostics["eigenvalues_closed_form"]), key=key)
    direct = sorted((complex(e) for e in np.linalg.eigvals(P2.jacobian)), key=key)
    assert np.allclose(closed, direct, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(Ns, st.floats(0.02, 0.6), st.floats(1.1, 4.0), Ks)
def test_finite_point_properties(N, m, p, K):
    P = derive_params(N, m, p)
    if m >= P.m_c or abs(m - P.m_s) < 1e-6:
        return
    for variant in ("XY_plus", "XY_minus", "UV"):
        pts = finite_critical_points(P, K, variant)
        co = renormalized_coefficients(P, K)
        vf = vector_field(variant, P, co.C_K if variant == "UV" else K)
        coef = 1.0 if variant == "UV" else K
        for pt in pts:
            assert vf.residual(pt.coords) < 1e-10
            h = 1e-6 * max(1.0, abs(pt.coords[1]))
            fd = fd_jacobian(vf, *pt.coords, h=h)
            scale = np.max(np.abs(pt.jacobian))
            tol = np.full((2, 2), 1e-6 * scale)
            if pt.coords[0] == 0.0:
                # the one-sided difference of the power term u^q is of size h^(q-1)
                tol[1, 0] += 2 * coef * h ** (P.power - 1)
            assert np.all(np.abs(fd - pt.jacobian) <= tol + 1e-6 * np.abs(pt.jacobian))
    # chart consistency
    xy = {p.id: p.coords for p in finite_critical_points(P, K, "XY_plus")}
    for pt in finite_critical_points(P, K, "UV"):
        X, Y = xy_from_uv(P, K, *pt.coords)
        assert (X, Y) == pytest.approx(xy[pt.id], rel=1e-10, abs=1e-10)
        U, V = uv_from_xy(P, K, X, Y)
        assert (U, V) == pytest.approx(pt.coords, rel=1e-10, abs=1e-10)
    # P2 eigenvalues in UV chart
    P2 = finite_critical_points(P, K, "UV")[2]
    key = lambda z: (z.real, z.imag)
    closed = sorted((complex(z) for z in p2_uv_eigenvalues(P, co.C_K)), key=key)
    direct = sorted((complex(z) for z in np.linalg.eigvals(P2.jacobian)), key=key)
    assert np.allclose(closed, direct, rtol=1e-10, atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(Ns, st.floats(0.02, 0.3), Ks, st.floats(0.0, 3.0), st.floats(-3.0, 3.0))
def test_sign_flip_reduction(N, m, K, U, W):
    P = derive_params(N, m, 2.0)
    if m >= P.m_c:
        return
    co = renormalized_coefficients(P, K)
    mirrored = uv_field(P, K, mirrored=True)
    bis = uv_bis_field(P, co.C_K)
    du, dv = mirrored(U, -W)
    expected = (-du, dv)
    got = bis(U, W)
    assert got[0] == pytest.approx(expected[0], abs=1e-14 * max(1.0, abs(expected[0])))
    assert got[1] == pytest.approx(expected[1], abs=1e-14 * max(1.0, abs(expected[1])) * 10)


def test_not_equilibrium():
    vf = vector_field("XY_plus", LOW, 1.0)
    with pytest.raises(NotEquilibrium):
        linearize_and_classify(CriticalPoint("P0", "finite", (0.1, 0.0)), vf)


@pytest.mark.parametrize("vals,kind", [
    ((2.0, -1.0), Classification.SADDLE),
    ((2.0, 1.0), Classification.UNSTABLE_NODE),
    ((-2.0, -1.0), Classification.STABLE_NODE),
    ((1 + 1j, 1 - 1j), Classification.UNSTABLE_FOCUS),
    ((-1 + 1j, -1 - 1j), Classification.STABLE_FOCUS),
    ((1j, -1j), Classification.CENTER_OR_FOCUS),
    ((1e-12 + 1j, 1e-12 - 1j), Classification.CENTER_OR_FOCUS),
    ((0.0, 1.0), Classification.SADDLE_NODE),
])
def test_classification_table(vals, kind):
    assert classify_eigenvalues(vals) is kind


def test_infinity_points():
    ids = sorted(p.id for p in infinity_critical_points(LOW, 1.0))
    assert ids == ["Q2", "Q3"]
    pts = {p.id: p for p in infinity_critical_points(derive_params(3, 0.5, 1.2), 1.0)}
    assert pts["Q4"].coords == pytest.approx((1 / math.sqrt(1.25), 0.5 / math.sqrt(1.25), 0.0))
    assert pts["Q1"].coords == (1.0, 0.0, 0.0)
    assert pts["Q1"].classification is Classification.SADDLE_NODE
    assert pts["Q4"].classification is Classification.STABLE_NODE
    assert pts["Q2"].classification is Classification.UNSTABLE_NODE
    assert pts["Q3"].classification is Classification.STABLE_NODE


def test_infinity_points_m_plus_p_two():
    m = 0.1
    P = derive_params(3, m, 2 - m)
    K = (1 - m) ** 2 / 4
    pts = {p.id: p for p in infinity_critical_points(P, K)}
    assert pts["Q1"].diagnostics["y"] == pytest.approx((1 - m) / 2, rel=1e-12)
    assert pts["Q4"].diagnostics["y"] == pytest.approx((1 - m) / 2, rel=1e-12)
    assert pts["Q1"].coords == pytest.approx(pts["Q4"].coords)
    assert sorted(p.id for p in infinity_critical_points(P, 1.1 * K)) == ["Q2", "Q3"]
    two = {p.id: p for p in infinity_critical_points(P, 0.5 * K)}
    y1, y4 = two["Q1"].diagnostics["y"], two["Q4"].diagnostics["y"]
    assert y1 < y4
    assert y1 * y4 == pytest.approx(0.5 * K)
    assert y1 + y4 == pytest.approx(1 - m)


def test_local_profile_behavior():
    d = local_profile_behavior("P1", "in", LOW)
    assert (d.kind, d.exponent, d.limit_direction) == ("tail_P1", -10.0, "xi_to_infinity")
    d = local_profile_behavior("P2", "out", LOW)
    assert d.exponent == pytest.approx(-2 / 0.9)
    assert d.limit_direction == "xi_to_0"
    assert local_profile_behavior("Q2", "out", LOW).exponent == pytest.approx(10.0)
    with pytest.raises(Unsupported):
        local_profile_behavior("P0", "in", LOW)
    with pytest.raises(ValueError):
        local_profile_behavior("P0", "sideways", LOW)


def test_flow_diagnostics():
    fd = flow_diagnostics(LOW, 1.0)
    assert fd.axis_sign(1.0) == 0.0
    assert fd.axis_sign(0.5) == 1.0
    assert fd.axis_sign(2.0) == -1.0
    small = flow_diagnostics(LOW, 1e-6)
    assert all(small.line_F(X) > 0 for X in np.linspace(0.0, 200.0, 2001))
    # isocline branch with 2 + (1-m)Y < 0
    for X in (0.1, 1.0, 5.0):
        for Y in (-2 / 0.9 - 0.01, -2 / 0.9 - 1.0, -30.0):
            assert fd.isocline_G(X, Y) > 0
    with pytest.raises(DomainError):
        flow_diagnostics(derive_params(3, 0.5, 2), 1.0)


def test_line_F_matches_field():
    # F(X) = X' - Y' along the line Y = Y(P2) + (X - X(P2)) through P2
    for K in (1e-4, 0.01, 0.3):
        fd = flow_diagnostics(LOW, K)
        vf = vector_field("XY_plus", LOW, K)
        X2 = renormalized_coefficients(LOW, K).X_P2
        for X in np.linspace(0.1, 3 * X2, 7):
            Y = -2 / 0.9 + X - X2
            dX, dY = vf(X, Y)
            assert fd.line_F(X) == pytest.approx(dX - dY, rel=1e-11)


def test_stable_node_predicate():
    assert stable_node_predicate(derive_params(20, 0.05, 1.1))
    assert not stable_node_predicate(derive_params(10, 0.05, 1.1))
