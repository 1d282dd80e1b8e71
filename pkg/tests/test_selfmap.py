import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from anomalous.errors import DomainError
from anomalous.explicit import p2_power_solution
from anomalous.params import (C_K_coefficient, C_s_coefficient, ExponentPair, Regime,
                              critical_exponents, derive_params)
from anomalous.profiles import Profile, ode_residual
from anomalous.selfmap import image_dimension, map_parameters, map_params, map_profile


def test_image_dimension_example():
    assert image_dimension(3, 0.1) == pytest.approx(16 / 7, rel=1e-14)
    with pytest.raises(DomainError):
        image_dimension(3, 0.5)
    with pytest.raises(DomainError):
        map_parameters(3, 0.1, 2, 0.0)


def test_regime_flip():
    im = map_parameters(3, 0.1, 2.0, 1.0)
    assert critical_exponents(im.N_bar)[1] == pytest.approx(1 / 15)
    assert im.params_bar().regime is Regime.HIGH_SUBCRITICAL
    assert im.alpha > 0 > im.alpha_bar
    assert im.beta < 0 < im.beta_bar
    assert im.beta_bar == pytest.approx((im.m - 1) * im.alpha_bar / 2)


def test_coefficient_identities():
    im = map_parameters(3, 0.1, 2.0, 1.0)
    assert abs(C_s_coefficient(im.N_bar, 0.1) + C_s_coefficient(3, 0.1)) < 1e-10
    assert abs(C_K_coefficient(im.N_bar, 0.1, 2.0, im.K_bar) - C_K_coefficient(3, 0.1, 2.0, 1.0)) < 1e-10
    back = map_parameters(im.N_bar, 0.1, 2.0, im.K_bar)
    assert abs(back.N_bar - 3) < 1e-10
    assert back.K_bar == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(3, 10), st.floats(0.01, 0.99), st.floats(1.05, 5.0), st.floats(1e-3, 1e3))
def test_identities_hold_everywhere(N, frac, p, K):
    m_c, _ = critical_exponents(N)
    m = frac * m_c
    im = map_parameters(N, m, p, K)
    assert C_s_coefficient(im.N_bar, m) == pytest.approx(-C_s_coefficient(N, m), rel=1e-9, abs=1e-10)
    assert C_K_coefficient(im.N_bar, m, p, im.K_bar) == pytest.approx(C_K_coefficient(N, m, p, K), rel=1e-9)
    back = map_parameters(im.N_bar, m, p, im.K_bar)
    assert back.N_bar == pytest.approx(N, rel=1e-10)
    assert back.K_bar == pytest.approx(K, rel=1e-9)
    # the image exponents are the ones tied to K_bar on the other branch
    P = derive_params(im.N_bar, m, p, strict=False)
    alpha_of_K = 2 * m * (m * im.K_bar) ** (-(1 - m) / (p - m))
    assert abs(im.alpha_bar) == pytest.approx(alpha_of_K, rel=1e-9)
    assert P.m_c > m


def test_xi_map_fixed_point_and_orientation():
    im = map_parameters(3, 0.1, 2.0, 1.0)
    assert im.xi_map(1.0) == 1.0
    x = np.array([0.5, 1.0, 2.0])
    assert np.all(np.diff(im.xi_map(x)) < 0)
    assert im.xi_exponent == pytest.approx(-(3 * (1 / 3 - 0.1)) / (2 * 0.1))


def test_p2_power_maps_to_p2_power():
    for N, m, p in ((3, 0.1, 2.0), (4, 0.2, 2.5), (3, 0.25, 1.7)):
        im = map_parameters(N, m, p, 1.0)
        src = p2_power_solution(derive_params(N, m, p))
        dst = p2_power_solution(im.params_bar())
        xi = np.geomspace(0.1, 10, 9)
        xb, fb = im.f_map(xi, src.f(xi))
        assert np.allclose(fb, dst.f(xb), rtol=1e-12)


def test_mapped_shooting_profile(low):
    im = map_params(low.params, low.shooting.K_star, low.exponents)
    assert im.alpha == low.exponents.alpha
    mapped = map_profile(im, low.profile)
    assert not mapped.normalized
    assert np.all(np.diff(mapped.xi) > 0)
    assert np.all(mapped.f > 0)
    # the tail exponent -(N-2)/m turns into a bounded value at the origin
    assert mapped.f[1] == pytest.approx(mapped.f0, rel=1e-3)
    assert ode_residual(mapped, im.params_bar(), im.exponents_bar) < 1e-4
    # with the unflipped exponents the mapped profile is not a solution
    wrong = ExponentPair(-im.alpha_bar, -im.beta_bar)
    assert ode_residual(mapped, im.params_bar(), wrong) > 1e-2


def test_mapped_profile_is_decreasing(low):
    im = map_params(low.params, low.shooting.K_star, low.exponents)
    mapped = map_profile(im, low.profile)
    # next to the origin xi f'/f is at round-off level, with either sign
    Y = mapped.xi[1:] * mapped.fprime[1:] / mapped.f[1:]
    assert np.all(Y < 1e-8)
    body = mapped.f[1:] < mapped.f0 * (1 - 1e-9)
    assert np.all(mapped.fprime[1:][body] < 0)
    # samples decrease once the drop from f(0) clears the relative noise of the tail
    clear = mapped.f[1:] < mapped.f0 * (1 - 1e-6)
    assert np.all(np.diff(mapped.f[1:][clear]) < 0)


def test_map_profile_guards(low):
    im = map_params(low.params, low.shooting.K_star, low.exponents)
    bad = Profile(np.array([0.0, 1.0, 2.0]), np.array([1.0, -1.0, 1.0]), np.zeros(3))
    with pytest.raises(DomainError):
        map_profile(im, bad)
    no_tail = Profile(np.array([0.0, 1.0, 2.0]), np.array([1.0, 0.5, 0.2]), np.zeros(3))
    with pytest.raises(DomainError):
        map_profile(im, no_tail)


def test_map_reverse_direction(high):
    # mapping the high branch sends it back to the low branch of another dimension
    im = map_params(high.params, high.shooting.K_star, high.exponents)
    assert im.params_bar().regime is Regime.LOW_SUBCRITICAL
    assert im.alpha_bar > 0
    mapped = map_profile(im, high.profile)
    assert ode_residual(mapped, im.params_bar(), im.exponents_bar) < 1e-4


def test_as_dict():
    d = map_parameters(3, 0.1, 2.0, 1.0).as_dict()
    assert set(d) == {"N", "m", "p", "K", "alpha", "beta", "N_bar", "K_bar", "alpha_bar", "beta_bar"}
