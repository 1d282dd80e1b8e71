import math

import numpy as np
import pytest

from anomalous.errors import ConstraintViolated, DomainError
from anomalous.explicit import (ExplicitConnectionOrbit, explicit_connection_constants, explicit_connection_orbit,
                                explicit_line_families, fisher_first_integral_check, fisher_g_form, flow_coefficients,
                                line_family_alpha, line_family_K, p2_power_solution,
                                sobolev_connection_curve, stationary_sobolev)
from anomalous.oracles import clustered_grid, sobolev_curve_deviation
from anomalous.params import ExponentPair, derive_params, renormalized_coefficients
from anomalous.profiles import Profile, fit_tail, ode_residual


def test_stationary_sobolev_values():
    rf = stationary_sobolev(3, 2.0, 1.0)
    # u(0)^{p - m_s} = (N^2 - 4)(p + m_s) D / 2
    assert float(rf.f(0.0)) == pytest.approx(5.5 ** (1 / 1.8), rel=1e-14)
    assert float(rf.df(0.0)) == 0.0
    xi = np.logspace(2, 4, 200)
    assert fit_tail(xi, rf.f(xi)).slope == pytest.approx(-5.0, rel=1e-5)
    with pytest.raises(DomainError):
        stationary_sobolev(3, 1.0, 1.0)
    with pytest.raises(DomainError):
        stationary_sobolev(3, 2.0, 0.0)


@pytest.mark.parametrize("N,p,D", [(3, 2.0, 1.0), (4, 1.5, 0.3), (5, 3.0, 2.0)])
def test_stationary_sobolev_solves_equation(N, p, D):
    P = derive_params(N, (N - 2) / (N + 2), p)
    rf = stationary_sobolev(N, p, D)
    coarse = Profile.from_function(rf.f, rf.df, 1e-3, 1e3, 4001)
    fine = Profile.from_function(rf.f, rf.df, 1e-3, 1e3, 8001)
    r_coarse = ode_residual(coarse, P, ExponentPair(0.0, 0.0))
    r_fine = ode_residual(fine, P, ExponentPair(0.0, 0.0))
    assert r_fine < 1e-8
    # what remains is fourth-order truncation of the finite differences
    assert r_coarse / r_fine > 10
    assert fisher_first_integral_check(rf, N, p) < 1e-8


def test_fisher_detects_non_solutions():
    rf = stationary_sobolev(3, 2.0, 1.0)
    assert fisher_first_integral_check(lambda r: rf.f(r) * (1 + 0.01 * r), 3, 2.0) > 1e-4


def test_fisher_g_form():
    _, dev = fisher_g_form(stationary_sobolev(3, 2.0, 1.0), 3, 2.0)
    assert dev < 1e-10


def test_sobolev_curve():
    P = derive_params(3, 0.2, 2)
    V2 = sobolev_connection_curve(P)
    assert V2(0.0) == 1.0
    U_star = ((P.m + P.p) / (2 * P.m)) ** ((1 - P.m) / (P.p - P.m))
    assert V2(U_star) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(DomainError):
        sobolev_connection_curve(derive_params(3, 0.1, 2))
    assert sobolev_curve_deviation() < 1e-6


def test_p2_power_solution():
    P = derive_params(3, 0.1, 2)
    rf = p2_power_solution(P)
    C = (2 * 0.1 * 3 * (1 / 3 - 0.1) / 0.81) ** (1 / 1.9)
    assert float(rf.f(1.0)) == pytest.approx(C, rel=1e-15)
    # the quoted reference value 0.396950 agrees to four significant digits
    assert float(rf.f(1.0)) == pytest.approx(0.396950, abs=5e-5)
    prof = Profile.from_function(rf.f, rf.df, 0.5, 5.0, 401, f0=1.0)
    assert ode_residual(prof, P, ExponentPair(0.0, 0.0)) < 1e-8
    # any exponents: the alpha and beta terms cancel for this profile
    assert ode_residual(prof, P, ExponentPair.from_alpha(0.37, 0.1)) < 1e-8


@pytest.mark.parametrize("K", [0.3, 1.0, 4.0])
def test_p2_power_is_the_point_P2(K):
    P = derive_params(3, 0.1, 2)
    rf = p2_power_solution(P)
    e = 2 * P.m * (P.m * K) ** (-(1 - P.m) / (P.p - P.m))
    for xi in (0.3, 1.0, 7.0):
        f = float(rf.f(xi))
        X = e * xi ** 2 * f ** (1 - P.m) / (2 * P.m)
        Y = xi * float(rf.df(xi)) / f
        assert X == pytest.approx(renormalized_coefficients(P, K).X_P2, rel=1e-12)
        assert Y == pytest.approx(-2 / (1 - P.m), rel=1e-14)


def test_connection_constants_N7():
    c = explicit_connection_constants(7)
    assert c.m3 == pytest.approx((41 - 4 * math.sqrt(71)) / 109, rel=1e-14)
    assert c.m3 == pytest.approx(0.0669303, abs=5e-8)
    assert c.K == pytest.approx(0.197508, abs=1e-6)
    assert c.a == pytest.approx(26.78, abs=5e-3)
    assert c.b == pytest.approx(-3.0983, abs=5e-5)
    assert c.admissible
    for m, a, b in ((c.m3, c.a, c.b), (c.m4, c.a_m4, c.b_m4)):
        assert (a / b) ** 2 / ((7 - 2) / m) - 1 == pytest.approx(0.0, abs=1e-8)
    assert abs(c.f_of_m(c.m3)) < 1e-10 and abs(c.f_of_m(c.m4)) < 1e-10


@pytest.mark.parametrize("N", [7, 8, 10, 15])
def test_connection_constant_invariants(N):
    c = explicit_connection_constants(N)
    m_c, m_s = (N - 2) / N, (N - 2) / (N + 2)
    assert c.m3 < c.m1 < c.m2 < c.m4
    assert c.f_of_m(c.m1) < 0 and c.f_of_m(c.m2) < 0 and c.f_of_m(m_s) < 0
    assert c.m2 < m_s < m_c
    for m, K in ((c.m3, c.K), (c.m4, c.K_m4)):
        assert K > 2 * (m_c - m) / N > 0


@pytest.mark.parametrize("N", [3, 4, 5, 6])
def test_low_dimensions_flag_inadmissible(N):
    c = explicit_connection_constants(N)
    assert not c.admissible
    assert c.m2 < (N - 2) / (N + 2)
    with pytest.raises(ConstraintViolated):
        explicit_connection_orbit(c, "m3")


@pytest.mark.parametrize("N", [7, 9, 12])
@pytest.mark.parametrize("which", ["m3", "m4"])
def test_connection_orbit(N, which):
    orbit = explicit_connection_orbit(explicit_connection_constants(N), which)
    W = np.linspace(0.0, orbit.W_end, 102)[1:-1]
    assert orbit.residual(W) < 1e-9
    assert orbit.X(0.0) == 0.0
    if which == "m3":
        assert orbit.b < 0
        assert abs(orbit.X(orbit.W_end)) < 1e-12 * orbit.a * math.sqrt(orbit.W_end)
    # the coefficient polynomial vanishes on the branch
    poly = orbit.polynomial(W)
    _, size = orbit.normal_flow(W)
    assert np.max(np.abs(poly)) < 1e-9 * 2 * N * N * np.max(size)


@pytest.mark.parametrize("scale", [(1.0, 1.05), (0.9, 1.0), (1.1, 0.97)])
def test_flow_polynomial_off_branch(scale):
    # for curves that are not invariant, 2N^2 times the normal flow is the A1..A4 polynomial
    c = explicit_connection_constants(7)
    base = explicit_connection_orbit(c, "m3")
    a, b = base.a * scale[0], base.b * scale[1]
    N, m, K = 7.0, c.m3, c.K
    bent = ExplicitConnectionOrbit(base.params, K, a, b, base.W_end, flow_coefficients(N, m, K, a, b))
    W = np.linspace(0.0, base.W_end, 52)[1:-1]
    flow, _ = bent.normal_flow(W)
    poly = bent.polynomial(W)
    assert np.max(np.abs(poly)) > 1.0
    assert np.allclose(2 * N * N * flow, poly, rtol=1e-10, atol=1e-10 * np.max(np.abs(poly)))


def test_connection_orbit_branch_guard():
    with pytest.raises(ValueError):
        explicit_connection_constants(7).branch("m5")
    with pytest.raises(DomainError):
        explicit_connection_constants(2)


def test_line_family_P0Q4():
    P = derive_params(3, 0.1, 1.9)
    alpha = line_family_alpha(P, "P0Q4")
    rf = explicit_line_families(P, "P0Q4", 1.0, alpha)
    k = alpha * 0.9 / (2 * 0.1 * 3)
    assert rf.domain[1] == pytest.approx(math.sqrt(1.0 / k), rel=1e-14)
    prof = Profile.from_function(rf.f, rf.df, grid=clustered_grid(1e-3, rf.domain[1]))
    assert ode_residual(prof, P, ExponentPair.from_alpha(alpha, P.m)) < 1e-8
    with pytest.raises(DomainError):
        explicit_line_families(P, "P0Q4", -1.0)


def test_line_family_P1Q4():
    P = derive_params(3, 0.1, 1.9)
    alpha = line_family_alpha(P, "P1Q4")
    e = ExponentPair.from_alpha(alpha, P.m)
    for D in (0.3, 1.0, 5.0):
        rf = explicit_line_families(P, "P1Q4", D, alpha)
        prof = Profile.from_function(rf.f, rf.df, 1e-2, 1e2, 4001, f0=1.0)
        assert ode_residual(prof, P, e) < 1e-8
        # tail along P2 -> P1: slope -(N-2)/m
        xi = np.logspace(4, 6, 100)
        assert fit_tail(xi, rf.f(xi)).slope == pytest.approx(-10.0, rel=1e-3)
        # vertical asymptote at the origin like P2
        xi = np.logspace(-8, -6, 100)
        assert fit_tail(xi, rf.f(xi)).slope == pytest.approx(-2 / 0.9, rel=1e-3)


def test_line_family_P1Q4_D0_is_p2_power():
    P = derive_params(3, 0.1, 1.9)
    rf = explicit_line_families(P, "P1Q4", 0.0)
    p2 = p2_power_solution(P)
    xi = np.geomspace(0.01, 100, 50)
    assert np.allclose(rf.f(xi), p2.f(xi), rtol=1e-12)


def test_line_family_guards():
    P = derive_params(3, 0.1, 1.9)
    with pytest.raises(ConstraintViolated):
        explicit_line_families(derive_params(3, 0.1, 2.0), "P0Q4", 1.0)
    with pytest.raises(ConstraintViolated):
        explicit_line_families(P, "P1Q4", 1.0, K=1.0)
    explicit_line_families(P, "P1Q4", 1.0, K=line_family_K(P, "P1Q4"))
    with pytest.raises(ValueError):
        line_family_K(P, "P2Q4")
