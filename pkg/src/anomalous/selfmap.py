"""Dimension-changing self-map between the two anomalous regimes.

For fixed ``m`` and ``p`` the renormalized phase plane only depends on
``C_s(N, m)`` and ``C_K(N, m, p, K)``.  The dimension

    N̄ = 2(N - 2 - 2m) / (N(m_c - m))

gives ``C_s(N̄) = -C_s(N)``, and a matching ``K̄`` keeps ``C_K``.  The sign
flip of ``C_s`` is absorbed by the ``(V, η̄) -> (-V, -η̄)`` symmetry, so the
map sends ``m < m_s(N)`` to ``m > m_s(N̄)``; it is an involution.

With ``r = N(m_c - m)`` and ``λ = 2m/r`` the remaining relations are

    K̄ = K λ^{(2-p-m)/(1-m)},     |ᾱ| = |α| λ^{(m+p-2)/(p-m)},
    ξ̄ = ξ^{-r/(2m)},             f̄(ξ̄) = λ^{2/(p-m)} ξ^{(N-2)/m} f(ξ).

The map exchanges the tail ``f ~ C ξ^{-(N-2)/m}`` with the value at the
origin, and the growing branch (α > 0) with the decaying one (α < 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .params import ExponentPair, ModelParams, critical_exponents, derive_params
from .profiles import Profile, fit_tail

__all__ = ["SelfMapImage", "image_dimension", "map_parameters", "map_profile", "map_params"]


def image_dimension(N: float, m: float) -> float:
    m_c, _ = critical_exponents(N)
    if not 0.0 < m < m_c:
        raise DomainError(f"the self-map needs 0 < m < m_c={m_c}, got m={m}")
    return 2.0 * (N - 2.0 - 2.0 * m) / (N * (m_c - m))


@dataclass(frozen=True)
class SelfMapImage:
    """Image of ``(N, m, p, K, α, β)`` under the self-map."""

    N: float
    m: float
    p: float
    K: float
    alpha: float
    beta: float
    N_bar: float
    K_bar: float
    alpha_bar: float
    beta_bar: float

    @property
    def ratio(self) -> float:
        """``λ = 2m / (N(m_c - m))``."""
        m_c, _ = critical_exponents(self.N)
        return 2.0 * self.m / (self.N * (m_c - self.m))

    @property
    def xi_exponent(self) -> float:
        return -1.0 / self.ratio

    @property
    def exponents_bar(self) -> ExponentPair:
        return ExponentPair(self.alpha_bar, self.beta_bar)

    def params_bar(self) -> ModelParams:
        return derive_params(self.N_bar, self.m, self.p, strict=False)

    def xi_map(self, xi):
        return np.asarray(xi, dtype=float) ** self.xi_exponent

    def f_map(self, xi, f):
        """``(ξ, f(ξ)) -> (ξ̄, f̄(ξ̄))``."""
        xi = np.asarray(xi, dtype=float)
        factor = self.ratio ** (2.0 / (self.p - self.m))
        return self.xi_map(xi), factor * xi ** ((self.N - 2.0) / self.m) * np.asarray(f, dtype=float)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("N", "m", "p", "K", "alpha", "beta", "N_bar", "K_bar", "alpha_bar", "beta_bar")}


def map_parameters(N: float, m: float, p: float, K: float,
                   alpha: float | None = None, beta: float | None = None) -> SelfMapImage:
    """Image parameters of the self-map.

    ``alpha`` defaults to the direct-branch value ``2m (mK)^{-(1-m)/(p-m)}``
    and ``beta`` to ``(m-1)α/2``.  The image exponents carry the opposite
    sign, since the map swaps the growing and the decaying branch.

    Raises
    ------
    DomainError
        If ``m >= m_c(N)`` or ``K <= 0``.
    """
    N_bar = image_dimension(N, m)
    if not K > 0.0:
        raise DomainError(f"K must be positive, got {K}")
    m_c, _ = critical_exponents(N)
    lam = 2.0 * m / (N * (m_c - m))
    if alpha is None:
        alpha = 2.0 * m * (m * K) ** (-(1.0 - m) / (p - m))
    if beta is None:
        beta = (m - 1.0) * alpha / 2.0
    scale = lam ** ((m + p - 2.0) / (p - m))
    return SelfMapImage(
        N=N, m=m, p=p, K=K, alpha=alpha, beta=beta, N_bar=N_bar,
        K_bar=K * lam ** ((2.0 - p - m) / (1.0 - m)),
        alpha_bar=-alpha * scale, beta_bar=-beta * scale,
    )


def map_params(params: ModelParams, K: float, exponents: ExponentPair | None = None) -> SelfMapImage:
    a, b = (None, None) if exponents is None else (exponents.alpha, exponents.beta)
    return map_parameters(params.N, params.m, params.p, K, a, b)


def map_profile(image: SelfMapImage, profile: Profile) -> Profile:
    """Transport a profile to the image parameters.

    The map reverses orientation, so the samples are re-sorted.  The value
    at ``ξ̄ = 0`` is the image of the tail constant of ``profile``, and the
    derivative follows from ``ξ̄f̄'/f̄ = ((N-2)/m + ξf'/f) / e`` with
    ``e`` the exponent of the ``ξ`` map.
    """
    xi, f, fp = profile.xi[1:], profile.f[1:], profile.fprime[1:]
    if np.any(f <= 0.0):
        raise DomainError("profile must be positive on its grid")
    e = image.xi_exponent
    xb, fb = image.f_map(xi, f)
    Y = xi * fp / f
    Yb = ((image.N - 2.0) / image.m + Y) / e
    fpb = Yb * fb / xb
    order = np.argsort(xb)
    xb, fb, fpb = xb[order], fb[order], fpb[order]
    if profile.tail is None:
        raise DomainError("profile needs a tail fit to place the value at the origin")
    _, f0 = image.f_map(1.0, profile.tail.C)
    mapped = Profile(np.concatenate([[0.0], xb]), np.concatenate([[float(f0)], fb]),
                     np.concatenate([[0.0], fpb]), normalized=False)
    mapped.tail = fit_tail(xb, fb)
    return mapped
