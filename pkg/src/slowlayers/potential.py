"""Double-well potential F(u) = |1-u^2|^n / (2n) and the constants derived from it."""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy import integrate

from .errors import QuadratureError, ValidationError

K_SEQ_CAP = 64
# Non-finite second derivatives (n < 2 at u = +-1) are replaced by this value.
DDF_CAP = 1e12


class Regime(enum.Enum):
    SUBCRITICAL = "subcritical"  # n < p
    CRITICAL = "critical"  # n = p
    SUPERCRITICAL = "supercritical"  # n > p


@dataclass(frozen=True)
class PotentialParams:
    p: float
    n: float
    eps: float

    def __post_init__(self):
        for name in ("p", "n", "eps"):
            val = getattr(self, name)
            if not np.isfinite(val):
                raise ValidationError(f"{name} must be finite, got {val!r}")
        if self.p <= 1:
            raise ValidationError(f"p must exceed 1, got {self.p}")
        if self.n <= 1:
            raise ValidationError(f"n must exceed 1, got {self.n}")
        if self.eps <= 0:
            raise ValidationError(f"eps must be positive, got {self.eps}")

    @property
    def regime(self) -> Regime:
        if math.isclose(self.n, self.p, rel_tol=0.0, abs_tol=1e-12):
            return Regime.CRITICAL
        return Regime.SUBCRITICAL if self.n < self.p else Regime.SUPERCRITICAL

    def with_eps(self, eps: float) -> "PotentialParams":
        return PotentialParams(self.p, self.n, eps)


def eval_F(params: PotentialParams, u):
    w = np.abs(1.0 - np.square(u))
    return w**params.n / (2.0 * params.n)


def eval_dF(params: PotentialParams, u):
    """F'(u) = -u (1-u^2) |1-u^2|^(n-2), written so that n < 2 stays finite at u = +-1."""
    u = np.asarray(u, dtype=float)
    w = 1.0 - u * u
    out = -u * np.sign(w) * np.abs(w) ** (params.n - 1.0)
    return out if out.ndim else float(out)


def eval_ddF(params: PotentialParams, u):
    u = np.asarray(u, dtype=float)
    w = 1.0 - u * u
    aw = np.abs(w)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.sign(w) * aw ** (params.n - 1.0) + 2.0 * (params.n - 1.0) * u * u * aw ** (params.n - 2.0)
    out = np.where(np.isfinite(out), out, DDF_CAP)
    return out if out.ndim else float(out)


def _transition_integrand(params: PotentialParams):
    expo = (params.p - 1.0) / params.p
    return lambda s: eval_F(params, s) ** expo


def transition_energy(params: PotentialParams, nodes: int | None = None, tol: float = 1e-10) -> float:
    """Minimal energy c_p of a single -1 -> +1 transition.

    With ``nodes=None`` the integral over [-1, 1] is done by adaptive Gauss-Kronrod;
    otherwise a fixed Gauss-Legendre rule with that many nodes is used (for
    convergence checks).
    """
    pref = (params.p / (params.p - 1.0)) ** ((params.p - 1.0) / params.p)
    g = _transition_integrand(params)
    if nodes is not None:
        xs, ws = np.polynomial.legendre.leggauss(int(nodes))
        return float(pref * np.dot(ws, g(xs)))
    # integrand is even; integrate over [0, 1]
    val, err = integrate.quad(g, 0.0, 1.0, epsabs=tol / 100, epsrel=1e-14, limit=200)
    if err > tol / 2:
        raise QuadratureError(f"transition energy quadrature error {err:.2e} exceeds {tol:.1e}")
    return float(2.0 * pref * val)


@dataclass(frozen=True)
class CriticalConstants:
    c_p: float
    lambda_p: float
    C_p: float
    alpha: float
    gamma_np: float  # math.inf when n <= p

    def k_seq(self) -> Iterator[float]:
        """k_1 = 0, k_2 = alpha, k_{m+1} = alpha (k_m + 1); at most K_SEQ_CAP terms."""
        return itertools.islice(_k_generator(self.alpha), K_SEQ_CAP)

    def k(self, m: int) -> float:
        if not 1 <= m <= K_SEQ_CAP:
            raise ValidationError(f"k_m is available for 1 <= m <= {K_SEQ_CAP}, got m={m}")
        return next(itertools.islice(_k_generator(self.alpha), m - 1, None))


def _k_generator(alpha: float) -> Iterator[float]:
    k = 0.0
    yield k
    k = alpha
    while True:
        yield k
        k = alpha * (k + 1.0)


def lambda_p(p: float) -> float:
    return 2.0 ** (1.0 - 1.0 / p) * (p - 1.0) ** (-1.0 / p)


def wave_steepness(p: float) -> float:
    """C_p = (1 / (2(p-1)))^(1/p), the rate in tanh(C_p x / eps)."""
    return (1.0 / (2.0 * (p - 1.0))) ** (1.0 / p)


def gamma_np(p: float, n: float) -> float:
    if n <= p:
        return math.inf
    return n * p / (n - p) - 1.0


def constants(params: PotentialParams) -> CriticalConstants:
    p, n = params.p, params.n
    return CriticalConstants(
        c_p=transition_energy(params),
        lambda_p=lambda_p(p),
        C_p=wave_steepness(p),
        alpha=(p - 1.0) / p + 1.0 / n,
        gamma_np=gamma_np(p, n),
    )
