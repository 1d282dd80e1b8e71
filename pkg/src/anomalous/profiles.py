"""Profiles, eternal solutions and their mass.

A connection ``P0 -> P1`` in the renormalized plane is turned into the
profile through

    X = X_P2·U,   Y = (c·V - 2)/(1-m),   ln ξ = d·η̄ + const,
    f^{1-m} = 2m X / (|α| ξ²),   f' = Y f / ξ.

The additive constant in ``ln ξ`` is fixed by ``f(0) = 1``.  The profile is
unique only up to the scaling group ``f -> λ f(λ^k ξ)``,
``k = (p-m)/(σ+2)``, which the phase plane cannot see; ``f(0) = 1`` picks
one representative.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gamma

from .errors import DegenerateOrbit, NonIntegrableTail
from .integrate import Orbit, hermite
from .params import ExponentPair, ModelParams, renormalized_coefficients, K_from_alpha

__all__ = [
    "TailFit",
    "Profile",
    "EternalSolution",
    "reconstruct_profile",
    "fit_tail",
    "ode_residual",
    "ode_terms",
    "fd_weights",
    "evaluate_solution",
    "mass",
    "sphere_area",
    "write_profile_csv",
    "write_snapshots_csv",
]

#: spacing in η̄ of the resampled connection
RESAMPLE_STEP = 0.004
#: decades of ξ added past the capture at P1
TAIL_DECADES = 2.0


@dataclass(frozen=True)
class TailFit:
    """Least-squares fit ``f ≈ C ξ^slope`` over the last decade of the grid."""

    C: float
    slope: float
    xi_range: tuple[float, float]


def fit_tail(xi: np.ndarray, f: np.ndarray, decades: float = 1.0) -> TailFit:
    xi = np.asarray(xi, dtype=float)
    f = np.asarray(f, dtype=float)
    pos = xi > 0
    xi, f = xi[pos], f[pos]
    hi = xi[-1]
    lo = max(hi / 10.0 ** decades, xi[0])
    sel = xi >= lo
    if sel.sum() < 3:
        raise DegenerateOrbit("too few samples for a tail fit")
    slope, logC = np.polyfit(np.log(xi[sel]), np.log(f[sel]), 1)
    return TailFit(float(math.exp(logC)), float(slope), (float(lo), float(hi)))


@dataclass
class Profile:
    """Sampled profile ``f(ξ)`` with an anchor at ``ξ = 0``.

    ``xi[0] == 0`` carries ``f(0)``; the remaining samples are increasing.
    Between samples the profile is interpolated as a cubic Hermite spline in
    ``(ln ξ, ln f)``.  Below the first positive sample a quadratic
    ``f(0) + c ξ²`` is used, above the last one the fitted power tail.
    """

    xi: np.ndarray
    f: np.ndarray
    fprime: np.ndarray
    tail: TailFit | None = None
    normalized: bool = True
    exact: Callable | None = field(default=None, repr=False)

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float)
        self.f = np.asarray(self.f, dtype=float)
        self.fprime = np.asarray(self.fprime, dtype=float)
        if self.xi[0] != 0.0:
            raise ValueError("the first sample must be the anchor xi = 0")
        if np.any(np.diff(self.xi) <= 0):
            raise ValueError("xi must be strictly increasing")

    @property
    def f0(self) -> float:
        return float(self.f[0])

    @property
    def positive(self) -> slice:
        return slice(1, None)

    @classmethod
    def from_function(cls, f: Callable, df: Callable, xi_min: float = 1e-4,
                      xi_max: float = 1e3, points: int = 4001,
                      f0: float | None = None, grid=None) -> "Profile":
        """Sample a closed-form profile on a logarithmic grid, or on ``grid``."""
        if grid is None:
            xi = np.logspace(math.log10(xi_min), math.log10(xi_max), points)
        else:
            xi = np.asarray(grid, dtype=float)
        fv = np.asarray(f(xi), dtype=float)
        dv = np.asarray(df(xi), dtype=float)
        anchor = float(f(0.0)) if f0 is None else f0
        prof = cls(np.concatenate([[0.0], xi]), np.concatenate([[anchor], fv]),
                   np.concatenate([[0.0], dv]), None, normalized=math.isclose(anchor, 1.0),
                   exact=f)
        prof.tail = fit_tail(xi, fv)
        return prof

    def __call__(self, xi):
        x = np.atleast_1d(np.asarray(xi, dtype=float))
        out = np.empty_like(x)
        xs, fs, ds = self.xi[1:], self.f[1:], self.fprime[1:]
        x1 = xs[0]
        small = x < x1
        c = ds[0] / (2.0 * x1)
        out[small] = self.f[0] + c * x[small] ** 2
        big = x > xs[-1]
        if big.any():
            if self.tail is None:
                raise ValueError("profile has no tail fit for extrapolation")
            out[big] = self.tail.C * x[big] ** self.tail.slope
        mid = ~(small | big)
        if mid.any():
            s = np.log(x[mid])
            S = np.log(xs)
            Lf = np.log(fs)
            Y = xs * ds / fs
            i = np.clip(np.searchsorted(S, s, side="right") - 1, 0, len(S) - 2)
            out[mid] = np.exp(hermite(S[i], S[i + 1], Lf[i], Lf[i + 1], Y[i], Y[i + 1], s))
        return out.reshape(np.shape(xi)) if np.ndim(xi) else float(out[0])

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.xi, self.f, self.fprime

    def max_location(self) -> float:
        return float(self.xi[int(np.argmax(self.f))])


def reconstruct_profile(connection: Orbit, params: ModelParams, exponents: ExponentPair,
                        *, step: float = RESAMPLE_STEP,
                        tail_decades: float = TAIL_DECADES) -> Profile:
    """Turn a ``P0 -> P1`` connection in the renormalized chart into ``f(ξ)``.

    The connection is resampled uniformly in η̄ through its dense output.
    Once the orbit is captured at P1 it is continued for ``tail_decades``
    decades of ξ along the linearization of the saddle: ``X`` decays like
    ``ξ^μ`` with ``μ = 2 + (1-m)Y_1`` and ``Y - Y_1`` stays proportional to
    ``X``.  The neglected terms are of order ``X²``, far below round-off at
    the capture radius.

    Raises
    ------
    DegenerateOrbit
        If the orbit does not start close to P0 (``U`` small, ``V`` at the
        saddle value), so that the anchor ``f(0) = 1`` cannot be placed.
    """
    m = params.m
    alpha = abs(exponents.alpha)
    if alpha == 0.0:
        raise DegenerateOrbit("the phase-plane reconstruction needs alpha != 0")
    K = K_from_alpha(params, alpha)
    co = renormalized_coefficients(params, K)
    U0, V0 = connection.y[0]
    if not (0.0 < U0 < 1e-6 and abs(co.c * V0 - 2.0) < 1e-4):
        raise DegenerateOrbit(f"connection does not start at P0 (U={U0:.3g}, V={V0:.6g})")
    n = max(int(math.ceil((connection.t[-1] - connection.t[0]) / step)), 8)
    tau = np.linspace(connection.t[0], connection.t[-1], n + 1)
    UV = connection.dense(tau)
    U, V = UV[:, 0], UV[:, 1]
    if np.any(U <= 0.0):
        raise DegenerateOrbit("connection leaves the half-plane U > 0")
    X = co.X_P2 * U
    Y = (co.c * V - 2.0) / (1.0 - m)
    # anchor: near ξ = 0, ln f ≈ Y/2 and ξ² = 2mX/(|α| f^{1-m})
    ln_xi_s = 0.5 * (math.log(2.0 * m * X[0] / alpha) - (1.0 - m) * Y[0] / 2.0)
    ln_xi = ln_xi_s + co.d * (tau - tau[0])
    xi = np.exp(ln_xi)
    f = np.exp((np.log(2.0 * m * X / alpha) - 2.0 * ln_xi) / (1.0 - m))
    if tail_decades > 0:
        Y1 = -(params.N - 2.0) / m
        if abs(Y[-1] - Y1) > 1e-3 * abs(Y1):
            raise DegenerateOrbit(f"connection does not end at P1 (Y={Y[-1]:.6g}, expected {Y1:.6g})")
        mu = 2.0 + (1.0 - m) * Y1
        kappa = (Y[-1] - Y1) / X[-1]
        h = co.d * (tau[1] - tau[0])
        ds = h * np.arange(1, int(math.ceil(tail_decades * math.log(10.0) / h)) + 1)
        Xt = X[-1] * np.exp(mu * ds)
        X = np.concatenate([X, Xt])
        Y = np.concatenate([Y, Y1 + kappa * Xt])
        ln_xi = np.concatenate([ln_xi, ln_xi[-1] + ds])
        xi = np.exp(ln_xi)
        f = np.exp((np.log(2.0 * m * X / alpha) - 2.0 * ln_xi) / (1.0 - m))
    fp = Y * f / xi
    prof = Profile(np.concatenate([[0.0], xi]), np.concatenate([[1.0], f]),
                   np.concatenate([[0.0], fp]))
    prof.tail = fit_tail(xi, f)
    return prof


# ---------------------------------------------------------------------------
# residual of the profile equation

def fd_weights(x: np.ndarray, x0: np.ndarray, order: int) -> np.ndarray:
    """Finite-difference weights on arbitrary stencils (batched).

    ``x`` has shape ``(n, k)`` (stencil nodes), ``x0`` shape ``(n,)``;
    returns ``(n, k)`` weights for the derivative of the given order.
    """
    h = x - x0[:, None]
    k = h.shape[1]
    powers = np.arange(k)
    A = h[:, None, :] ** powers[None, :, None]  # rows: powers, cols: nodes
    rhs = np.zeros((h.shape[0], k))
    rhs[:, order] = math.factorial(order)
    return np.linalg.solve(A, rhs[:, :, None])[:, :, 0]


def ode_terms(xi: np.ndarray, f: np.ndarray, params: ModelParams,
              exponents: ExponentPair, fprime: np.ndarray | None = None
              ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Terms of the profile equation at the interior points of the grid.

    Derivatives are taken in ``s = ln ξ``.  When ``fprime`` is given the
    first derivatives come from it and only ``(f^m)_s`` is differenced once
    more; this keeps the second derivative accurate near ``ξ = 0``, where
    ``f`` is flat.  Otherwise 5-point finite differences of ``f`` and
    ``f^m`` are used throughout.

    Returns ``(xi_interior, terms, floor)`` with ``terms`` of shape
    ``(5, n)``: ``(f^m)''``, ``(N-1)(f^m)'/ξ``, ``-αf``, ``βξf'`` and
    ``ξ^σ f^p``.  ``floor`` bounds the round-off of the differenced terms.
    """
    xi = np.asarray(xi, dtype=float)
    f = np.asarray(f, dtype=float)
    if len(xi) < 5:
        raise ValueError("need at least five samples")
    m, N = params.m, params.N
    g = f ** m
    idx = np.arange(2, len(xi) - 2)
    stencil = idx[:, None] + np.arange(-2, 3)[None, :]
    # offsets in s = ln ξ, accurate even when neighbours nearly coincide
    x = xi[idx]
    h = np.log1p((xi[stencil] - x[:, None]) / x[:, None])
    zero = np.zeros(len(idx))
    w1 = fd_weights(h, zero, 1)
    eps = np.finfo(float).eps
    if fprime is None:
        w2 = fd_weights(h, zero, 2)
        g_s = np.einsum("ij,ij->i", w1, g[stencil])
        g_ss = np.einsum("ij,ij->i", w2, g[stencil])
        f_s = np.einsum("ij,ij->i", w1, f[stencil])
        floor = eps * np.einsum("ij,ij->i", np.abs(w2) + N * np.abs(w1), np.abs(g[stencil])) / x ** 2
    else:
        fs_all = xi * np.asarray(fprime, dtype=float)
        gs_all = m * g * fs_all / f
        g_s = gs_all[idx]
        g_ss = np.einsum("ij,ij->i", w1, gs_all[stencil])
        f_s = fs_all[idx]
        # ξf'/f is typically a difference of numbers as large as its range,
        # so its error is a few ulps of max|ξf'/f| rather than of itself
        spread = max(1.0, float(np.max(np.abs(fs_all / f))))
        noise = 16.0 * eps * spread * m * np.abs(g[stencil])
        floor = np.einsum("ij,ij->i", np.abs(w1) + N, noise) / x ** 2
    fi = f[idx]
    terms = np.vstack([
        (g_ss - g_s) / x ** 2,
        (N - 1.0) * g_s / x ** 2,
        -exponents.alpha * fi,
        exponents.beta * f_s,
        x ** params.sigma * fi ** params.p,
    ])
    return x, terms, floor


#: points whose round-off floor exceeds this fraction of the term scale are skipped
RESOLUTION = 1e-9


def ode_residual(profile: Profile | tuple, params: ModelParams,
                 exponents: ExponentPair, *, xi_range: tuple[float, float] | None = None) -> float:
    """Largest residual of the profile equation, normalized.

    The largest absolute sum of the five terms over the interior grid is
    divided by the largest term magnitude over the same grid.  Grid points
    where double precision cannot resolve the differenced terms (very close
    to ``ξ = 0``, where ``f^m`` is flat to within round-off) are skipped.
    ``profile`` may also be a pair ``(xi, f)`` of positive samples, in which
    case every derivative is a finite difference.
    """
    if isinstance(profile, Profile):
        xi, f, fp = profile.xi[1:], profile.f[1:], profile.fprime[1:]
    else:
        xi, f = (np.asarray(a, dtype=float) for a in profile)
        fp = None
    if xi_range is not None:
        sel = (xi >= xi_range[0]) & (xi <= xi_range[1])
        xi, f = xi[sel], f[sel]
        fp = None if fp is None else fp[sel]
    _, terms, floor = ode_terms(xi, f, params, exponents, fp)
    mag = np.abs(terms)
    scale = np.max(mag[:, floor <= RESOLUTION * np.max(mag)], initial=0.0)
    keep = floor <= RESOLUTION * scale
    if not keep.any():
        raise ValueError("grid too coarse or too close to the origin to resolve the equation")
    return float(np.max(np.abs(terms[:, keep].sum(axis=0))) / np.max(mag[:, keep]))


# ---------------------------------------------------------------------------
# eternal solutions

@dataclass
class EternalSolution:
    """``u(x, t) = e^{αt} f(|x| e^{-βt})``."""

    params: ModelParams
    exponents: ExponentPair
    profile: Profile
    shooting: object = field(default=None, repr=False)

    def __call__(self, r, t: float):
        return evaluate_solution(self, r, t)


def evaluate_solution(sol: EternalSolution, x_radius, t: float):
    r = np.asarray(x_radius, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be non-negative")
    a, b = sol.exponents.alpha, sol.exponents.beta
    return math.exp(a * t) * sol.profile(r * math.exp(-b * t))


def sphere_area(N: float) -> float:
    """Surface area of the unit sphere in ``R^N``."""
    return 2.0 * math.pi ** (N / 2.0) / gamma(N / 2.0)


def _profile_mass(profile: Profile, N: float) -> float:
    tail = profile.tail
    if tail is None:
        raise NonIntegrableTail("profile has no tail fit")
    if tail.slope >= -N:
        raise NonIntegrableTail(f"fitted tail slope {tail.slope:.4g} is not below -N={-N}")
    xi, f = profile.xi, profile.f
    from scipy.integrate import simpson

    body = simpson(f * xi ** (N - 1.0), x=xi)
    xT = xi[-1]
    rest = tail.C * xT ** (N + tail.slope) / (-tail.slope - N)
    return sphere_area(N) * (body + rest)


def mass(sol: EternalSolution, t: float) -> tuple[float, float]:
    """Mass ``M(t) = e^{(α+Nβ)t} M(0)`` and its exponential rate.

    ``M(0)`` integrates the sampled profile and closes the integral with the
    fitted power tail.

    Raises
    ------
    NonIntegrableTail
        If the fitted tail slope is not below ``-N``.
    """
    N = sol.params.N
    rate = sol.exponents.alpha + N * sol.exponents.beta
    M0 = _profile_mass(sol.profile, N)
    return M0 * math.exp(rate * t), rate


# ---------------------------------------------------------------------------
# CSV export

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _header(provenance: dict) -> str:
    return "# " + " ".join(f"{k}={v}" for k, v in provenance.items()) + "\n"


def write_profile_csv(profile: Profile, provenance: dict) -> str:
    buf = io.StringIO()
    buf.write(_header(provenance))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["xi", "f", "fprime"])
    for row in zip(profile.xi, profile.f, profile.fprime):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_snapshots_csv(sol: EternalSolution, radii, times, provenance: dict) -> str:
    buf = io.StringIO()
    buf.write(_header(provenance))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "r", "u"])
    for t in times:
        u = np.atleast_1d(sol(np.asarray(radii, dtype=float), float(t)))
        for r, v in zip(np.atleast_1d(radii), u):
            w.writerow([_fmt(t), _fmt(r), _fmt(v)])
    return buf.getvalue()
