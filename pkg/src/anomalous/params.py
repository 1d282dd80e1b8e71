"""Model parameters, critical exponents and the K <-> (alpha, beta) maps.

The equation is ``u_t = Δu^m + |x|^σ u^p`` in dimension ``N`` with the
critical weight ``σ = 2(p-1)/(1-m)``.  Everything downstream is a function
of the triple ``(N, m, p)``; this module derives the critical exponents,
the regime, and the coefficients of the renormalized phase-plane system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import DomainError

__all__ = [
    "TOL_MS",
    "Regime",
    "ModelParams",
    "ExponentPair",
    "RenCoefficients",
    "FujitaGap",
    "derive_params",
    "critical_exponents",
    "exponents_from_K",
    "K_from_alpha",
    "renormalized_coefficients",
    "C_s_coefficient",
    "C_K_coefficient",
    "fujita_gap",
]

#: relative half-width of the band around m_s classified as Sobolev
TOL_MS = 1e-8


class Regime(str, Enum):
    LOW_SUBCRITICAL = "LowSubcritical"
    SOBOLEV = "Sobolev"
    HIGH_SUBCRITICAL = "HighSubcritical"
    NO_ETERNAL = "NoEternal"

    def __str__(self) -> str:
        return self.value


def critical_exponents(N: float) -> tuple[float, float]:
    """Return ``(m_c, m_s) = ((N-2)/N, (N-2)/(N+2))``."""
    return (N - 2.0) / N, (N - 2.0) / (N + 2.0)


def _classify(N: float, m: float, tol_ms: float) -> Regime:
    m_c, m_s = critical_exponents(N)
    if abs(m - m_s) <= tol_ms * m_s:
        return Regime.SOBOLEV
    if m >= m_c:
        return Regime.NO_ETERNAL
    if m < m_s:
        return Regime.LOW_SUBCRITICAL
    return Regime.HIGH_SUBCRITICAL


@dataclass(frozen=True)
class ModelParams:
    """Validated ``(N, m, p)`` with the derived exponents.

    ``N`` is normally an integer >= 3; the self-map produces non-integer
    dimensions, which are accepted when built with ``strict=False``.
    """

    N: float
    m: float
    p: float
    tol_ms: float = TOL_MS
    sigma: float = field(init=False)
    m_c: float = field(init=False)
    m_s: float = field(init=False)
    regime: Regime = field(init=False)

    def __post_init__(self) -> None:
        m_c, m_s = critical_exponents(self.N)
        object.__setattr__(self, "sigma", 2.0 * (self.p - 1.0) / (1.0 - self.m))
        object.__setattr__(self, "m_c", m_c)
        object.__setattr__(self, "m_s", m_s)
        object.__setattr__(self, "regime", _classify(self.N, self.m, self.tol_ms))

    @property
    def power(self) -> float:
        """Exponent ``(p-m)/(1-m)`` of the reaction term in the phase plane (> 1)."""
        return (self.p - self.m) / (1.0 - self.m)

    @property
    def tail_exponent(self) -> float:
        """Decay exponent ``-(N-2)/m`` of the anomalous profile."""
        return -(self.N - 2.0) / self.m

    def as_dict(self) -> dict:
        return {
            "N": self.N,
            "m": self.m,
            "p": self.p,
            "sigma": self.sigma,
            "m_c": self.m_c,
            "m_s": self.m_s,
            "regime": self.regime.value,
        }


def derive_params(N: float, m: float, p: float, *, tol_ms: float = TOL_MS,
                  strict: bool = True) -> ModelParams:
    """Validate ``(N, m, p)`` and derive σ, m_c, m_s and the regime.

    Raises
    ------
    DomainError
        Unless ``N >= 3`` (an integer when ``strict``), ``0 < m < 1`` and
        ``p > 1``.  With ``strict=False`` any real ``N > 2`` is accepted.
    """
    if not all(math.isfinite(v) for v in (N, m, p)):
        raise DomainError(f"non-finite parameters N={N}, m={m}, p={p}")
    if strict:
        if N < 3 or float(N) != int(N):
            raise DomainError(f"dimension must be an integer N >= 3, got {N}")
    elif N <= 2:
        raise DomainError(f"dimension must exceed 2, got {N}")
    if not 0.0 < m < 1.0:
        raise DomainError(f"diffusion exponent must lie in (0, 1), got m={m}")
    if not p > 1.0:
        raise DomainError(f"reaction exponent must exceed 1, got p={p}")
    return ModelParams(float(N), float(m), float(p), tol_ms=tol_ms)


@dataclass(frozen=True)
class ExponentPair:
    """Self-similar exponents of ``u = e^{αt} f(|x| e^{-βt})``."""

    alpha: float
    beta: float

    @classmethod
    def from_alpha(cls, alpha: float, m: float) -> "ExponentPair":
        return cls(alpha, (m - 1.0) * alpha / 2.0)


def exponents_from_K(params: ModelParams, K: float, branch: int) -> ExponentPair:
    """Invert ``K = (1/m)(2m/|α|)^{(p-m)/(1-m)}`` and attach the sign ``branch``.

    ``branch`` is +1 for the direct ansatz (α > 0) and -1 for the mirrored
    one (α < 0); it is never inferred from the regime.
    """
    if not K > 0.0:
        raise DomainError(f"K must be positive, got {K}")
    if branch not in (1, -1):
        raise DomainError(f"branch must be +1 or -1, got {branch}")
    m, p = params.m, params.p
    abs_alpha = 2.0 * m * (m * K) ** (-(1.0 - m) / (p - m))
    return ExponentPair.from_alpha(branch * abs_alpha, m)


def K_from_alpha(params: ModelParams, alpha: float) -> float:
    if alpha == 0.0:
        raise DomainError("K is undefined for alpha = 0 (stationary branch)")
    m = params.m
    return (2.0 * m / abs(alpha)) ** params.power / m


def C_s_coefficient(N: float, m: float) -> float:
    m_c, m_s = critical_exponents(N)
    return (N + 2.0) * (m_s - m) / math.sqrt(2.0 * m * N * (m_c - m))


def C_K_coefficient(N: float, m: float, p: float, K: float) -> float:
    m_c, _ = critical_exponents(N)
    num = (1.0 - m) ** (2.0 * (p - 1.0) / (p - m))
    den = ((2.0 * N * (m_c - m)) ** ((m + p - 2.0) / (2.0 * (p - m)))
           * math.sqrt(m) * K ** ((1.0 - m) / (p - m)))
    return num / den


@dataclass(frozen=True)
class RenCoefficients:
    """Coefficients of the renormalized ``(U, V)`` system.

    ``X = X_P2·U``, ``Y = (c·V - 2)/(1-m)`` and ``η = d·η̄``.
    """

    C_m: float
    C_s: float
    C_K: float
    c: float
    d: float
    X_P2: float


def renormalized_coefficients(params: ModelParams, K: float) -> RenCoefficients:
    if not K > 0.0:
        raise DomainError(f"K must be positive, got {K}")
    if params.m >= params.m_c:
        raise DomainError("P2 does not exist for m >= m_c")
    N, m, p = params.N, params.m, params.p
    gap = N * (params.m_c - m)
    X_P2 = (2.0 * gap / (K * (1.0 - m) ** 2)) ** ((1.0 - m) / (p - m))
    return RenCoefficients(
        C_m=(1.0 - m) / m,
        C_s=C_s_coefficient(N, m),
        C_K=C_K_coefficient(N, m, p, K),
        c=math.sqrt(2.0 * gap / m),
        d=(1.0 - m) / math.sqrt(2.0 * m * gap),
        X_P2=X_P2,
    )


@dataclass(frozen=True)
class FujitaGap:
    p_of_sigma: float
    p_F_sigma: float
    gap: float

    def as_dict(self) -> dict:
        return {"p_of_sigma": self.p_of_sigma, "p_F_sigma": self.p_F_sigma, "gap": self.gap}


def fujita_gap(params: ModelParams) -> FujitaGap:
    """Compare the critical ``p(σ)`` with the weighted Fujita exponent.

    The gap ``(σ+2)(m-m_c)/2`` is positive exactly when ``m > m_c``, where
    every solution blows up in finite time.
    """
    N, m, s = params.N, params.m, params.sigma
    p_sigma = 1.0 + s * (1.0 - m) / 2.0
    p_F = m + (2.0 + s) / N
    return FujitaGap(p_sigma, p_F, (s + 2.0) * (m - params.m_c) / 2.0)
