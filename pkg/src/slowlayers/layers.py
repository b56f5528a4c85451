"""Step-function targets, N-layer data, bounded-interval steady states and interface metrics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import EmptySetError, EpsilonTooLargeError, ValidationError, WrongRegimeError
from .grid import Field, Grid
from .potential import PotentialParams, Regime, transition_energy
from .profiles import (
    StandingWaveProfile,
    periodic_profile,
    solve_amplitude_for_period,
    standing_wave,
    support_radius,
)

DEFAULT_BAND = (-0.5, 0.5)


@dataclass(frozen=True)
class StepFunction:
    """v: [a, b] -> {-1, +1}, equal to ``first_sign`` on [a, h_1), alternating at each jump."""

    a: float
    b: float
    jumps: tuple[float, ...] = ()
    first_sign: int = -1

    def __post_init__(self):
        object.__setattr__(self, "jumps", tuple(float(h) for h in self.jumps))
        if not self.b > self.a:
            raise ValidationError(f"empty interval [{self.a}, {self.b}]")
        if self.first_sign not in (-1, 1):
            raise ValidationError(f"first_sign must be +1 or -1, got {self.first_sign}")
        hs = np.asarray(self.jumps)
        if len(hs) and (hs[0] <= self.a or hs[-1] >= self.b):
            raise ValidationError(f"jumps {self.jumps} must lie strictly inside ({self.a}, {self.b})")
        if np.any(np.diff(hs) <= 0):
            raise ValidationError(f"jumps must be strictly increasing, got {self.jumps}")

    @property
    def N(self) -> int:
        return len(self.jumps)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(np.asarray(self.jumps), x, side="right")
        out = self.first_sign * np.where(k % 2 == 0, 1.0, -1.0)
        return out if out.ndim else float(out)

    def layer_signs(self) -> np.ndarray:
        """sigma_j = value of v just right of h_j."""
        j = np.arange(1, self.N + 1)
        return self.first_sign * np.where(j % 2 == 0, 1.0, -1.0)

    def midpoints(self) -> np.ndarray:
        """m_1 = a, m_j = (h_{j-1} + h_j)/2, m_{N+1} = b."""
        hs = np.asarray(self.jumps)
        return np.concatenate([[self.a], 0.5 * (hs[1:] + hs[:-1]), [self.b]])


@dataclass(frozen=True)
class InterfaceSet:
    positions: np.ndarray

    def __len__(self):
        return len(self.positions)


def max_separation_radius(v: StepFunction) -> float:
    """Largest r with h_i + r <= h_{i+1} - r, h_1 - r >= a, h_N + r <= b."""
    if v.N == 0:
        return (v.b - v.a) / 2.0
    hs = np.asarray(v.jumps)
    cands = [hs[0] - v.a, v.b - hs[-1]]
    if v.N > 1:
        cands.append(float(np.min(np.diff(hs))) / 2.0)
    return float(min(cands))


def _nearest_layer(v: StepFunction, x: np.ndarray) -> np.ndarray:
    mids = v.midpoints()[1:-1]
    return np.searchsorted(mids, x, side="right")


def build_layer_datum(v: StepFunction, params: PotentialParams, grid: Grid,
                      profile: StandingWaveProfile | None = None) -> Field:
    """u(x) = sigma_j Phi_eps(x - h_j) on [m_j, m_{j+1}], the N-layer initial datum."""
    x = grid.x
    if v.N == 0:
        return Field(grid, np.full(grid.m, float(v.first_sign)))
    phi = profile or standing_wave(params)
    j = _nearest_layer(v, x)
    hs = np.asarray(v.jumps)
    sig = v.layer_signs()
    return Field(grid, sig[j] * phi(x - hs[j]))


def check_compacton_fit(v: StepFunction, params: PotentialParams) -> float:
    """Return x_bar, raising EpsilonTooLargeError if the compactons overlap or leave [a, b]."""
    xbar = support_radius(params)
    hs = np.asarray(v.jumps)
    if v.N and (hs[0] - xbar <= v.a or hs[-1] + xbar >= v.b):
        raise EpsilonTooLargeError(f"support radius {xbar:.4g} reaches the boundary")
    if v.N > 1 and xbar >= np.min(np.diff(hs)) / 2.0:
        raise EpsilonTooLargeError(f"support radius {xbar:.4g} exceeds half the smallest jump gap")
    return xbar


def build_stationary_subcritical(v: StepFunction, params: PotentialParams, grid: Grid,
                                 polish: bool = True) -> Field:
    """Glued compactons: exactly +-1 away from x_bar-neighbourhoods of the jumps (n < p).

    With ``polish`` the sampled field is projected onto the nearby steady state
    of the discrete equations (one Newton solve); plateau values stay at +-1.
    """
    if params.regime is not Regime.SUBCRITICAL:
        raise WrongRegimeError("glued compacton steady states need n < p")
    check_compacton_fit(v, params)
    field = build_layer_datum(v, params, grid)
    if polish:
        from .solver import solve_stationary

        field = solve_stationary(field, params)
    return field


def equidistant_zeros(N: int, a: float, b: float) -> np.ndarray:
    """h_1 = a + (b-a)/(2N), h_{i+1} = h_i + (b-a)/N."""
    return a + (b - a) / (2 * N) + np.arange(N) * (b - a) / N


def build_stationary_periodic(N: int, params: PotentialParams, domain: tuple[float, float],
                              grid: Grid | None = None, first_sign: int = -1) -> Field:
    """Periodic steady state with N equidistant zeros and u'(a) = u'(b) = 0 (n >= p)."""
    if params.regime is Regime.SUBCRITICAL:
        raise WrongRegimeError("periodic steady states with |u| < 1 are built here only for n >= p")
    if N < 1:
        raise ValidationError(f"N must be at least 1, got {N}")
    a, b = domain
    grid = grid or Grid.resolving(a, b, params.eps)
    sbar = solve_amplitude_for_period(params, (b - a) / N)
    prof = periodic_profile(params, sbar)
    h1 = equidistant_zeros(N, a, b)[0]
    return Field(grid, -first_sign * prof(grid.x - h1))


# ------------------------------------------------------------------ interfaces


def interfaces_of_field(u: Field, K: tuple[float, float] = DEFAULT_BAND) -> InterfaceSet:
    """Connected components of the preimage of K under the piecewise-linear interpolant.

    Each component is represented by its interpolated zero crossing when 0 is in K,
    otherwise by the midpoint of its extent.
    """
    lo, hi = K
    if lo > hi:
        raise ValidationError(f"band {K} is empty")
    x, w = u.grid.x, u.u
    seg_lo = np.minimum(w[:-1], w[1:])
    seg_hi = np.maximum(w[:-1], w[1:])
    hit = (seg_lo <= hi) & (seg_hi >= lo)
    if not hit.any():
        return InterfaceSet(np.zeros(0))
    idx = np.flatnonzero(hit)
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate([[idx[0]], idx[breaks + 1]])
    ends = np.concatenate([idx[breaks], [idx[-1]]])
    zero_in = lo <= 0.0 <= hi
    out = []
    for s, e in zip(starts, ends):
        pos = None
        if zero_in:
            w0, w1 = w[s:e + 1], w[s + 1:e + 2]
            cross = np.flatnonzero((w0 * w1 <= 0) & (w0 != w1))
            if len(cross):
                c = cross + s
                xs = x[c] + (x[c + 1] - x[c]) * w[c] / (w[c] - w[c + 1])
                pos = float(np.mean(xs))
        if pos is None:
            pos = 0.5 * (x[s] + x[e + 1])
        out.append(pos)
    return InterfaceSet(np.asarray(out))


def step_interfaces(v: StepFunction) -> InterfaceSet:
    return InterfaceSet(np.asarray(v.jumps, dtype=float))


def directed_distance(A: Sequence[float], B: Sequence[float]) -> float:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    return float(np.max(np.min(np.abs(A[:, None] - B[None, :]), axis=1)))


def hausdorff_distance(A, B) -> float:
    A = np.asarray(getattr(A, "positions", A), dtype=float)
    B = np.asarray(getattr(B, "positions", B), dtype=float)
    if A.size == 0 or B.size == 0:
        raise EmptySetError("Hausdorff distance needs two non-empty sets")
    return max(directed_distance(A, B), directed_distance(B, A))


def l1_distance(u: Field, v: StepFunction) -> float:
    """Trapezoidal approximation of int_a^b |u - v| dx."""
    if not (np.isclose(u.grid.a, v.a) and np.isclose(u.grid.b, v.b)):
        raise ValidationError("field and step function live on different intervals")
    x = u.grid.x
    return float(np.trapezoid(np.abs(u.u - v(x)), x))


# ---------------------------------------------------------------- continuum energy


def _tail_energy(params: PotentialParams, w: float) -> float:
    """int_{1-w}^1 (p/(p-1) F(s))^((p-1)/p) ds, integrated in the variable 1 - s."""
    if w <= 0:
        return 0.0
    p, n = params.p, params.n
    e = (p - 1.0) / p

    def g(om):
        return (p / (p - 1.0) * (om * (2.0 - om)) ** n / (2.0 * n)) ** e

    val, _ = integrate.quad(g, 0.0, min(w, 1.0), epsabs=0.0, epsrel=1e-12, limit=200)
    return float(val)


def layer_datum_gap(v: StepFunction, params: PotentialParams,
                    profile: StandingWaveProfile | None = None) -> float:
    """N c_p - E[u] for the continuum N-layer datum, summed tail by tail.

    On each piece the first integral turns the energy density into
    |Phi'| (p/(p-1) F(Phi))^((p-1)/p), so each layer falls short of c_p exactly
    by the two truncated tails beyond the neighbouring midpoints.
    """
    if v.N == 0:
        return 0.0
    phi = profile or standing_wave(params)
    mids = v.midpoints()
    gap = 0.0
    for j, h in enumerate(v.jumps):
        for d in (h - mids[j], mids[j + 1] - h):
            gap += _tail_energy(params, float(phi.tail(d)))
    return gap


def layer_datum_energy(v: StepFunction, params: PotentialParams,
                       profile: StandingWaveProfile | None = None) -> float:
    """Renormalised energy of the continuum N-layer datum (no grid involved)."""
    return v.N * transition_energy(params) - layer_datum_gap(v, params, profile)
