"""Stationary profiles on the real line: standing waves, compactons, periodic orbits.

All profiles are tabulated once along a smooth parametrisation of the inverse
map x(u), then evaluated by cubic Hermite interpolation followed by Newton
polishing against the exact quadrature of dx/du.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import CubicHermiteSpline

from .errors import (
    BisectionStallError,
    InversionError,
    QuadratureError,
    TargetOutOfRangeError,
    ValidationError,
    WrongRegimeError,
)
from .potential import PotentialParams, Regime, wave_steepness

N_TABLE = 4096
THETA_MAX = 40.0  # 1 - u = exp(-40) is below double resolution near u = 1
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def _gl_integrate(f, a, b):
    """Vectorised 10-point Gauss-Legendre integral of f over [a, b] (elementwise)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mid = 0.5 * (a + b)[..., None]
    half = 0.5 * (b - a)[..., None]
    vals = f(mid + half * _GL_X)
    return (half[..., 0]) * (vals @ _GL_W)


def inverse_scale(params: PotentialParams) -> float:
    """K in dx/du = K (1 - u^2)^(-n/p) for the standing wave."""
    p, n = params.p, params.n
    return params.eps * (2.0 * n * (p - 1.0) / p) ** (1.0 / p)


class _MonotoneInverse:
    """Invert a tabulated, strictly increasing map x(theta).

    ``rate(theta)`` is dx/dtheta (smooth and positive on the table range).
    """

    def __init__(self, rate, theta_nodes):
        self.rate = rate
        self.theta = np.asarray(theta_nodes, dtype=float)
        steps = _gl_integrate(rate, self.theta[:-1], self.theta[1:])
        self.x = np.concatenate([[0.0], np.cumsum(steps)])
        d = rate(self.theta)
        if not np.all(np.diff(self.x) > 0) or not np.all(d > 0):
            raise InversionError("tabulated inverse map is not strictly increasing")
        self._spline = CubicHermiteSpline(self.x, self.theta, 1.0 / d)

    @property
    def x_max(self) -> float:
        return float(self.x[-1])

    def __call__(self, x, newton_steps: int = 3, tol: float = 1e-12):
        x = np.clip(np.asarray(x, dtype=float), 0.0, self.x_max)
        th = np.clip(self._spline(x), self.theta[0], self.theta[-1])
        for _ in range(newton_steps):
            k = np.clip(np.searchsorted(self.theta, th, side="right") - 1, 0, len(self.theta) - 2)
            xk = self.x[k] + _gl_integrate(self.rate, self.theta[k], th)
            th_new = np.clip(th - (xk - x) / self.rate(th), self.theta[0], self.theta[-1])
            done = np.max(np.abs(th_new - th), initial=0.0) < tol
            th = th_new
            if done:
                break
        return th


@dataclass(frozen=True)
class StandingWaveProfile:
    """Monotone heteroclinic Phi_eps with Phi(0) = 0, odd, from -1 to +1.

    ``kind`` is "explicit-tanh" (n = p only) or "inverted-integral".
    ``support_radius`` is set only for compactons (n < p).
    """

    params: PotentialParams
    kind: str
    support_radius: float | None = None
    _inverse: _MonotoneInverse | None = field(default=None, repr=False, compare=False)
    _w_of_theta: object = field(default=None, repr=False, compare=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "explicit-tanh":
            out = np.tanh(wave_steepness(self.params.p) * x / self.params.eps)
            return out if out.ndim else float(out)
        ax = np.abs(x)
        th = self._inverse(ax)
        u = 1.0 - self._w_of_theta(th)
        beyond = ax >= self._inverse.x_max
        if self.support_radius is not None:
            beyond = ax >= self.support_radius
        u = np.where(beyond, 1.0, u)
        out = np.sign(x) * u
        return out if out.ndim else float(out)

    def tail(self, x):
        """1 - Phi(|x|), computed without cancellation."""
        ax = np.abs(np.asarray(x, dtype=float))
        if self.kind == "explicit-tanh":
            e2 = np.exp(-2.0 * wave_steepness(self.params.p) * ax / self.params.eps)
            out = 2.0 * e2 / (1.0 + e2)
        else:
            out = self._w_of_theta(self._inverse(ax))
            cut = self.support_radius if self.support_radius is not None else self._inverse.x_max
            out = np.where(ax >= cut, 0.0, out)
        return out if np.ndim(out) else float(out)

    def derivative(self, x):
        """Phi'(x) = (1 - Phi^2)^(n/p) / K, from the first integral."""
        u = np.asarray(self(x), dtype=float)
        q = self.params.n / self.params.p
        return np.clip(1.0 - u * u, 0.0, None) ** q / inverse_scale(self.params)


def _standing_wave_tables(params: PotentialParams):
    K = inverse_scale(params)
    q = params.n / params.p
    if q < 1.0:
        # 1 - u = (1 - theta)^(1/(1-q)); dx/dtheta is then smooth and bounded
        e = 1.0 / (1.0 - q)

        def w_of(th):
            return np.clip(1.0 - th, 0.0, None) ** e

        def rate(th):
            return K * e * (2.0 - w_of(th)) ** (-q)

        nodes = np.linspace(0.0, 1.0, N_TABLE)
    else:
        # 1 - u = exp(-theta)
        def w_of(th):
            return np.exp(-th)

        def rate(th):
            w = np.exp(-th)
            return K * w ** (1.0 - q) * (2.0 - w) ** (-q)

        nodes = np.linspace(0.0, THETA_MAX, N_TABLE)
    return _MonotoneInverse(rate, nodes), w_of


def standing_wave(params: PotentialParams, method: str = "auto") -> StandingWaveProfile:
    """Build Phi_eps.  ``method`` is "auto", "explicit" (n = p only) or "inverted"."""
    if method not in ("auto", "explicit", "inverted"):
        raise ValidationError(f"unknown standing wave method {method!r}")
    critical = params.regime is Regime.CRITICAL
    if method == "explicit" and not critical:
        raise WrongRegimeError("the tanh profile is exact only for n = p")
    if critical and method != "inverted":
        return StandingWaveProfile(params, "explicit-tanh")
    inv, w_of = _standing_wave_tables(params)
    radius = support_radius(params) if params.regime is Regime.SUBCRITICAL else None
    return StandingWaveProfile(params, "inverted-integral", radius, inv, w_of)


def support_radius(params: PotentialParams) -> float:
    """x_bar = eps * y_bar, where the compacton reaches +-1 (n < p only)."""
    if params.regime is not Regime.SUBCRITICAL:
        raise WrongRegimeError(f"support radius is infinite for n >= p (p={params.p}, n={params.n})")
    q = params.n / params.p
    e = 1.0 / (1.0 - q)
    # same desingularising substitution as the tabulation
    val, err = integrate.quad(
        lambda th: e * (2.0 - (1.0 - th) ** e) ** (-q), 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200
    )
    if err > 1e-11:
        raise QuadratureError(f"support radius quadrature error {err:.2e}")
    return inverse_scale(params) * val


# ---------------------------------------------------------------- periodic orbits


def _amplitude_scale(p: float) -> float:
    """A_p = (p / (p-1))^(1/p)."""
    return (p / (p - 1.0)) ** (1.0 / p)


def _period_integrand(params: PotentialParams, sbar: float):
    """Integrand of int_0^sbar (F(s) - F(sbar))^(-1/p) ds after s = sbar (1 - tau^k).

    With k = p/(p-1) the endpoint singularity at s = sbar cancels exactly; the
    difference F(s) - F(sbar) is formed without cancellation.
    """
    p, n = params.p, params.n
    k = p / (p - 1.0)
    B = 1.0 - sbar * sbar

    def g(tau):
        tau = np.asarray(tau, dtype=float)
        tk = tau**k
        z = sbar * sbar * tk * (2.0 - tk) / B
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(z > 0, np.expm1(n * np.log1p(z)) / np.where(z > 0, z, 1.0), n)
        # (F(s) - F(sbar)) / tau^k
        d_over = B**n * ratio * sbar * sbar * (2.0 - tk) / (B * 2.0 * n)
        return sbar * k * d_over ** (-1.0 / p)

    return g, k


def period(params: PotentialParams, sbar: float) -> float:
    """Distance T between consecutive zeros of the periodic orbit of amplitude sbar.

    The orbit itself repeats after 2T (it changes sign every T).
    """
    if not 0.0 < sbar < 1.0:
        raise ValidationError(f"amplitude must lie in (0, 1), got {sbar}")
    p = params.p
    g, k = _period_integrand(params, sbar)
    B = 1.0 - sbar * sbar
    # the integrand is sharply peaked near tau = 0 when sbar -> 1
    t0 = B ** (1.0 / k)
    pts = [t for t in t0 * 4.0 ** np.arange(0, 40) if t < 1.0]
    with warnings.catch_warnings():
        # the error estimate below is the arbiter
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(g, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=500, points=pts or None)
    pref = 2.0 * params.eps / _amplitude_scale(p)
    # absolute 1e-8, relaxed to 1e-10 relative once T exceeds 100
    if not np.isfinite(val) or pref * err > max(1e-8, 1e-10 * pref * val):
        raise QuadratureError(f"period quadrature error {pref * err:.2e} at sbar={sbar}")
    return float(pref * val)


def period_supremum(params: PotentialParams) -> float:
    """lim_{sbar -> 1} T(sbar); finite only for n < p."""
    if params.regime is not Regime.SUBCRITICAL:
        return math.inf
    p, n = params.p, params.n
    q = n / p
    # int_0^1 F^{-1/p} = (2n)^{1/p} int_0^1 (1-s^2)^{-q} ds
    e = 1.0 / (1.0 - q)
    val, _ = integrate.quad(lambda th: e * (2.0 - (1.0 - th) ** e) ** (-q), 0.0, 1.0, epsabs=1e-13, epsrel=1e-13)
    return 2.0 * params.eps / _amplitude_scale(p) * (2.0 * n) ** (1.0 / p) * val


SBAR_BRACKET = (1e-8, 1.0 - 1e-8)


def solve_amplitude_for_period(params: PotentialParams, T_target: float, rtol: float = 1e-8,
                               max_iter: int = 200) -> float:
    """Amplitude sbar with period(sbar) = T_target, by bisection.

    T is increasing on the whole bracket for p >= 2.  For p < 2 it diverges at
    both ends; the increasing branch above its minimiser is used.
    """
    if not T_target > 0:
        raise ValidationError(f"target period must be positive, got {T_target}")
    lo, hi = SBAR_BRACKET
    if params.p < 2.0:
        lo = float(optimize.minimize_scalar(lambda s: period(params, s), bounds=(lo, 0.999),
                                            method="bounded", options={"xatol": 1e-10}).x)
    T_lo, T_hi = period(params, lo), period(params, hi)
    if not T_lo <= T_target <= T_hi:
        raise TargetOutOfRangeError(
            f"period {T_target:.6g} outside the attainable range [{T_lo:.6g}, {T_hi:.6g}] "
            f"for p={params.p}, n={params.n}, eps={params.eps}"
        )
    best = None
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        T_mid = period(params, mid)
        if best is None or abs(T_mid - T_target) < abs(best[1] - T_target):
            best = (mid, T_mid)
        if T_mid < T_target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4e-16 * hi:
            break
    if abs(best[1] - T_target) > rtol * T_target:
        raise BisectionStallError(f"bisection stalled at sbar={best[0]!r}, period error {best[1] - T_target:.3e}")
    return best[0]


@dataclass(frozen=True)
class PeriodicProfile:
    """Odd periodic orbit with u(0) = 0, u'(0) > 0, |u| <= sbar.

    ``period`` is the zero spacing T; u(x + T) = -u(x) and the orbit repeats after 2T.
    The amplitude sbar is attained at x = T/2.
    """

    params: PotentialParams
    sbar: float
    period: float
    _inverse: _MonotoneInverse = field(repr=False, compare=False, default=None)

    @property
    def fundamental_period(self) -> float:
        return 2.0 * self.period

    def _quarter(self, y):
        # y in [0, T/2]; table variable increases with distance from the crest
        tau = self._inverse(self.period / 2.0 - y)
        k = self.params.p / (self.params.p - 1.0)
        return self.sbar * (1.0 - tau**k)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        T = self.period
        y = np.mod(x, 2.0 * T)
        sign = np.where(y < T, 1.0, -1.0)
        y = np.where(y < T, y, y - T)
        y = np.minimum(y, T - y)
        out = sign * self._quarter(y)
        return out if out.ndim else float(out)


def periodic_profile(params: PotentialParams, sbar: float, nodes: int = 2049) -> PeriodicProfile:
    T = period(params, sbar)
    g, _ = _period_integrand(params, sbar)
    scale = params.eps / _amplitude_scale(params.p)
    inv = _MonotoneInverse(lambda tau: scale * g(tau), np.linspace(0.0, 1.0, nodes))
    if abs(inv.x_max - T / 2.0) > 1e-8:
        raise QuadratureError(f"quarter-wave table length {inv.x_max!r} disagrees with T/2 = {T / 2!r}")
    return PeriodicProfile(params, sbar, T, inv)


def dump_profile_csv(profile, xs, path) -> None:
    xs = np.asarray(xs, dtype=float)
    us = np.asarray(profile(xs), dtype=float)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "u"])
        w.writerows(zip(xs.tolist(), us.tolist()))
