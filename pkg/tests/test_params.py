import math

import pytest
from hypothesis import given, strategies as st

from anomalous.errors import DomainError
from anomalous.params import (C_K_coefficient, ExponentPair, Regime, K_from_alpha,
                              critical_exponents, derive_params, exponents_from_K,
                              fujita_gap, renormalized_coefficients)

ms = st.floats(0.01, 0.99)
ps = st.floats(1.01, 6.0)
Ns = st.integers(3, 12)


def test_reference_parameters():
    P = derive_params(3, 0.1, 2)
    assert P.sigma == pytest.approx(20 / 9, rel=1e-15)
    assert P.m_c == pytest.approx(1 / 3)
    assert P.m_s == pytest.approx(1 / 5)
    assert P.regime is Regime.LOW_SUBCRITICAL
    assert derive_params(3, 4 / 15, 2).regime is Regime.HIGH_SUBCRITICAL
    assert derive_params(3, 0.2, 2).regime is Regime.SOBOLEV
    assert derive_params(3, 0.5, 2).regime is Regime.NO_ETERNAL


@pytest.mark.parametrize("args", [(2, 0.1, 2), (3.5, 0.1, 2), (3, 0.0, 2), (3, 1.0, 2),
                                  (3, 0.1, 1.0), (3, float("nan"), 2)])
def test_invalid_parameters(args):
    with pytest.raises(DomainError):
        derive_params(*args)


def test_non_integer_dimension_needs_relaxed_mode():
    assert derive_params(16 / 7, 0.1, 2, strict=False).regime is Regime.HIGH_SUBCRITICAL


@given(Ns, ms, ps)
def test_sigma_identity_and_ordering(N, m, p):
    P = derive_params(N, m, p)
    assert (1 - m) * P.sigma / 2 == pytest.approx(p - 1, rel=1e-14)
    assert 0 < P.m_s < P.m_c < 1


@given(Ns, st.floats(0.01, 0.6), ps)
def test_regime_matches_thresholds(N, m, p):
    P = derive_params(N, m, p)
    if abs(m - P.m_s) <= P.tol_ms:
        assert P.regime is Regime.SOBOLEV
    elif m < P.m_s:
        assert P.regime is Regime.LOW_SUBCRITICAL
    elif m < P.m_c:
        assert P.regime is Regime.HIGH_SUBCRITICAL
    else:
        assert P.regime is Regime.NO_ETERNAL


@pytest.mark.parametrize("N", [3, 4, 7])
def test_regime_flips_at_m_c(N):
    m_c, _ = critical_exponents(N)
    assert derive_params(N, m_c - 1e-9, 2).regime is Regime.HIGH_SUBCRITICAL
    assert derive_params(N, m_c + 1e-9, 2).regime is Regime.NO_ETERNAL


def test_exponents_examples():
    P = derive_params(3, 0.1, 2)
    e = exponents_from_K(P, 10.0, 1)
    assert e.alpha == pytest.approx(0.2, rel=1e-14)
    assert e.beta == pytest.approx(-0.09, rel=1e-14)
    assert exponents_from_K(P, 1e12, 1).alpha < 2e-6
    with pytest.raises(DomainError):
        exponents_from_K(P, 0.0, 1)
    with pytest.raises(DomainError):
        exponents_from_K(P, 1.0, 0)


@given(Ns, st.floats(0.01, 0.6), ps, st.floats(1e-4, 1e4), st.sampled_from([1, -1]))
def test_K_alpha_round_trip(N, m, p, K, branch):
    P = derive_params(N, m, p)
    e = exponents_from_K(P, K, branch)
    assert math.copysign(1, e.alpha) == branch
    assert K_from_alpha(P, e.alpha) == pytest.approx(K, rel=1e-12)
    assert e.alpha == pytest.approx(2 * e.beta / (m - 1), rel=1e-14)
    # mass-rate identity
    assert e.alpha + N * e.beta == pytest.approx(N * (m - P.m_c) * e.alpha / 2, rel=1e-12, abs=1e-14)


@given(st.floats(1e-3, 1e3), st.floats(1.001, 100))
def test_alpha_decreasing_in_K(K, factor):
    P = derive_params(3, 0.1, 2)
    assert exponents_from_K(P, K * factor, 1).alpha < exponents_from_K(P, K, 1).alpha


def test_from_alpha():
    e = ExponentPair.from_alpha(0.2, 0.1)
    assert e.beta == pytest.approx(-0.09)


def test_renormalized_coefficients_examples():
    P = derive_params(3, 0.1, 2)
    co = renormalized_coefficients(P, 1.0)
    closed = (2 * 3 * (1 / 3 - 0.1) / 0.9 ** 2) ** (0.9 / 1.9)
    assert co.X_P2 == pytest.approx(closed, rel=1e-14)
    # the quoted reference value 1.29592 agrees to five significant digits
    assert co.X_P2 == pytest.approx(1.29592, abs=5e-5)
    assert co.C_s == pytest.approx(1.336306, abs=5e-7)
    assert co.C_m == pytest.approx(9.0)
    assert renormalized_coefficients(derive_params(3, 0.2, 2), 3.0).C_s == 0.0
    with pytest.raises(DomainError):
        renormalized_coefficients(derive_params(3, 0.5, 2), 1.0)


@given(Ns, st.floats(0.01, 0.6), ps, st.floats(1e-3, 1e3))
def test_renormalized_invariants(N, m, p, K):
    P = derive_params(N, m, p)
    if m >= P.m_c or P.regime is Regime.SOBOLEV:
        return
    co = renormalized_coefficients(P, K)
    assert co.C_m > 0
    assert math.copysign(1, co.C_s) == math.copysign(1, P.m_s - m)
    assert co.C_K > 0
    assert C_K_coefficient(N, m, p, 1.1 * K) < co.C_K


def test_fujita_gap():
    g = fujita_gap(derive_params(3, 0.5, 2))
    assert (g.p_of_sigma, g.p_F_sigma, g.gap) == pytest.approx((2.0, 2.5, 0.5))
    m_c = 1 / 3
    assert fujita_gap(derive_params(3, m_c, 2)).gap == pytest.approx(0.0, abs=1e-15)
    assert fujita_gap(derive_params(3, 0.1, 2)).gap < 0


@given(Ns, ms, ps)
def test_fujita_gap_formula(N, m, p):
    g = fujita_gap(derive_params(N, m, p))
    assert g.p_F_sigma - g.p_of_sigma == pytest.approx(g.gap, abs=1e-12)
    assert (g.gap > 0) == (m > (N - 2) / N) or abs(g.gap) < 1e-12
