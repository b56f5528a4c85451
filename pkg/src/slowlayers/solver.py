"""Finite-volume discretisation of u_t = eps^p (|u_x|^{p-2} u_x)_x - F'(u) with
zero-flux (Neumann) ends, and adaptive time stepping with an energy acceptance test.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .errors import DtUnderflowError, NumericalError, ValidationError
from .grid import Field, Grid
from .potential import PotentialParams, eval_ddF, eval_dF, eval_F

log = logging.getLogger(__name__)

SCHEMES = ("explicit", "semi-implicit-lagged", "linearly-implicit")
DEFAULT_BAND = (-0.5, 0.5)


@dataclass(frozen=True)
class SolverConfig:
    scheme: str = "linearly-implicit"
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    dt_max: float = 1e3
    energy_tolerance: float = 1e-12
    reg_delta: float | None = None  # None: 1e-10 for p < 2, else 0
    cfl_safety: float = 0.9
    # implicit treatment of max(F'', 0) in the semi-implicit scheme
    stabilize: bool = False
    grow_after: int = 10
    grow_factor: float = 1.5
    # per-step consistency of the energy drop with dt ||u_t||^2 / eps; None disables
    dissipation_rtol: float | None = 1e-3
    dissipation_atol: float = 1e-14

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValidationError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValidationError("need 0 < dt_min <= dt_init <= dt_max")
        if self.reg_delta is not None and self.reg_delta < 0:
            raise ValidationError("reg_delta must be nonnegative")
        if not 0 < self.cfl_safety <= 1:
            raise ValidationError("cfl_safety must lie in (0, 1]")
        if self.dissipation_rtol is not None and not self.dissipation_rtol > 0:
            raise ValidationError("dissipation_rtol must be positive or None")

    def delta(self, p: float) -> float:
        if self.reg_delta is not None:
            return self.reg_delta
        return 1e-10 if p < 2 else 0.0


@dataclass(frozen=True)
class StepResult:
    accepted: bool
    dt_used: float
    energy_after: float
    ut_norm_sq: float
    energy_change: float = 0.0
    rejections: int = 0


# ----------------------------------------------------------------- spatial operators


def flux(g, p: float, delta: float = 0.0):
    """Regularised p-Laplacian flux (g^2 + delta^2)^((p-2)/2) g."""
    g = np.asarray(g, dtype=float)
    if p == 2.0:
        return g.copy() if g.ndim else float(g)
    if delta == 0.0:
        if p > 2:
            out = np.abs(g) ** (p - 2.0) * g
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(g == 0, 0.0, np.abs(g) ** (p - 2.0) * g)
    else:
        out = (g * g + delta * delta) ** ((p - 2.0) / 2.0) * g
    return out if np.ndim(out) else float(out)


def _diffusivity(g, p: float, delta: float):
    if p == 2.0:
        return np.ones_like(g)
    if delta == 0.0:
        with np.errstate(divide="ignore"):
            return np.abs(g) ** (p - 2.0)
    return (g * g + delta * delta) ** ((p - 2.0) / 2.0)


def rhs(u: np.ndarray, grid: Grid, params: PotentialParams, config: SolverConfig = SolverConfig()) -> np.ndarray:
    """du/dt = eps^p (Phi_{i+1/2} - Phi_{i-1/2}) / w_i - F'(u_i), zero flux at both ends.

    w_i is the control-volume length: h inside, h/2 at the end nodes.
    """
    h = grid.h
    phi = np.zeros(len(u) + 1)
    phi[1:-1] = flux(np.diff(u) / h, params.p, config.delta(params.p))
    return params.eps**params.p * np.diff(phi) / grid.weights - eval_dF(params, u)


def _gradient_density(g, p: float, delta: float):
    # antiderivative of the flux, zero at g = 0
    if delta == 0.0:
        return np.abs(g) ** p / p
    return ((g * g + delta * delta) ** (p / 2.0) - delta**p) / p


def energy_terms(u: np.ndarray, grid: Grid, params: PotentialParams, delta: float = 0.0):
    """Per-cell gradient and per-node potential contributions to the discrete energy."""
    h, eps, p = grid.h, params.eps, params.p
    grad = h * eps ** (p - 1.0) * _gradient_density(np.diff(u) / h, p, delta)
    pot = grid.weights * eval_F(params, u) / eps
    return grad, pot


def discrete_energy(u: np.ndarray, grid: Grid, params: PotentialParams, delta: float = 0.0) -> float:
    """E_h = sum_cells h eps^{p-1} |du/h|^p / p + sum_nodes w_i F(u_i) / eps.

    w_i are the trapezoid weights of the grid.  The gradient of E_h is exactly
    -(w_i/eps) times ``rhs``, so the semi-discrete flow dissipates it at the rate
    eps^{-1} ||u_t||^2 in the w-weighted norm.
    """
    grad, pot = energy_terms(u, grid, params, delta)
    return float(grad.sum() + pot.sum())


def _energy_change(u_old, u_new, grid, params, delta) -> float:
    g0, p0 = energy_terms(u_old, grid, params, delta)
    g1, p1 = energy_terms(u_new, grid, params, delta)
    return float(np.sum(g1 - g0) + np.sum(p1 - p0))


def l2_norm_sq(w: np.ndarray, grid: Grid) -> float:
    return float(np.dot(grid.weights * w, w))


# ------------------------------------------------------------------- time stepping


def explicit_dt_bound(u: np.ndarray, grid: Grid, params: PotentialParams, config: SolverConfig) -> float:
    """Forward-Euler stability estimate from the linearised diffusion and reaction."""
    p, h = params.p, grid.h
    delta = config.delta(p)
    g = np.diff(u) / h
    # linearised diffusivity d(flux)/dg
    lin = (p - 1.0) * _diffusivity(g, p, delta) if delta == 0.0 else (g * g + delta * delta) ** ((p - 4.0) / 2.0) * (
        (p - 1.0) * g * g + delta * delta)
    lin_max = float(np.max(lin, initial=0.0))
    bounds = []
    if lin_max > 0 and np.isfinite(lin_max):
        bounds.append(h * h / (2.0 * params.eps**p * lin_max))
    react = float(np.max(np.abs(eval_ddF(params, u)), initial=0.0))
    if react > 0:
        bounds.append(2.0 / react)
    return config.cfl_safety * min(bounds) if bounds else math.inf


def _semi_implicit_update(u, dt, grid, params, config):
    p, h, eps = params.p, grid.h, params.eps
    a = _diffusivity(np.diff(u) / h, p, config.delta(p))
    coef = dt * eps**p * a / h
    inv_w = 1.0 / grid.weights
    m = len(u)
    ab = np.zeros((3, m))
    ab[0, 1:] = -coef * inv_w[:-1]
    ab[2, :-1] = -coef * inv_w[1:]
    diag = np.ones(m)
    diag[:-1] += coef * inv_w[:-1]
    diag[1:] += coef * inv_w[1:]
    b = u - dt * eval_dF(params, u)
    if config.stabilize:
        s = dt * np.maximum(eval_ddF(params, u), 0.0)
        diag += s
        b += s * u
    ab[1] = diag
    return solve_banded((1, 1), ab, b, check_finite=False)


def _linearly_implicit_update(u, dt, grid, params, config):
    # (I - dt J(u)) (u_new - u) = dt rhs(u), J the exact tridiagonal Jacobian
    ab = -dt * rhs_jacobian_banded(u, grid, params, config)
    ab[1] += 1.0
    return u + solve_banded((1, 1), ab, dt * rhs(u, grid, params, config), check_finite=False)


def attempt_step(u: np.ndarray, dt: float, grid: Grid, params: PotentialParams, config: SolverConfig):
    """One update of size dt without retry; returns (u_new, StepResult)."""
    if not dt > 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    with np.errstate(all="ignore"):
        if config.scheme == "explicit":
            u_new = u + dt * rhs(u, grid, params, config)
        elif config.scheme == "linearly-implicit":
            u_new = _linearly_implicit_update(u, dt, grid, params, config)
        else:
            u_new = _semi_implicit_update(u, dt, grid, params, config)
        delta = config.delta(params.p)
        if np.all(np.isfinite(u_new)):
            dE = _energy_change(u, u_new, grid, params, delta)
        else:
            dE = math.inf
    accepted = bool(dE <= config.energy_tolerance)
    if not accepted:
        return u, StepResult(False, dt, math.nan, math.nan, dE)
    ut2 = l2_norm_sq((u_new - u) / dt, grid)
    if config.dissipation_rtol is not None:
        # first-order local error indicator: -dE should equal dt ||u_t||^2 / eps
        drop = -dE * params.eps
        budget = dt * ut2
        if abs(drop - budget) > config.dissipation_rtol * max(drop, budget) + config.dissipation_atol:
            return u, StepResult(False, dt, math.nan, math.nan, dE)
    E = discrete_energy(u_new, grid, params, delta)
    return u_new, StepResult(True, dt, E, ut2, dE)


def step(u: np.ndarray, dt: float, grid: Grid, params: PotentialParams, config: SolverConfig = SolverConfig()):
    """Advance by dt, halving dt until the energy test passes."""
    rejections = 0
    while True:
        u_new, res = attempt_step(u, dt, grid, params, config)
        if res.accepted:
            return u_new, StepResult(True, dt, res.energy_after, res.ut_norm_sq, res.energy_change, rejections)
        rejections += 1
        dt *= 0.5
        if dt < config.dt_min:
            raise DtUnderflowError(f"dt fell below dt_min={config.dt_min:g} after {rejections} rejections")


# ---------------------------------------------------------------------- run driver


def observation_times(t_end: float, per_decade: int = 64, t_first: float = 1e-2) -> np.ndarray:
    """Log-spaced observation schedule ending exactly at t_end."""
    if t_end <= 0:
        return np.zeros(0)
    if t_end <= t_first:
        return np.array([t_end])
    decades = math.log10(t_end / t_first)
    k = max(int(math.ceil(decades * per_decade)), 1)
    ts = t_first * 10.0 ** (np.arange(k + 1) * decades / k)
    ts[-1] = t_end
    return ts


@dataclass
class Snapshot:
    t: float
    energy: float
    positions: np.ndarray
    u: np.ndarray | None = None

    @property
    def count(self) -> int:
        return len(self.positions)


@dataclass
class RunRecord:
    params: PotentialParams
    grid: Grid
    E0: float
    snapshots: list[Snapshot] = field(default_factory=list)
    step_t: list[float] = field(default_factory=list)
    step_dt: list[float] = field(default_factory=list)
    step_E: list[float] = field(default_factory=list)
    step_ut2: list[float] = field(default_factory=list)
    rejections: int = 0
    aborted: bool = False
    final: np.ndarray | None = None
    events: list = field(default_factory=list)

    @property
    def t_final(self) -> float:
        return self.step_t[-1] if self.step_t else 0.0

    @property
    def E_final(self) -> float:
        return self.step_E[-1] if self.step_E else self.E0

    def write_log(self, path) -> None:
        """JSON lines: one record per observation (t, dt, E, ||u_t||^2, interfaces)."""
        st = np.asarray(self.step_t)
        with Path(path).open("w") as fh:
            for snap in self.snapshots:
                i = int(np.searchsorted(st, snap.t, side="right")) - 1
                row = {
                    "t": snap.t,
                    "dt": self.step_dt[i] if i >= 0 else None,
                    "E": snap.energy,
                    "ut_norm_sq": self.step_ut2[i] if i >= 0 else None,
                    "interfaces": [float(x) for x in snap.positions],
                }
                fh.write(json.dumps(row) + "\n")

    def write_snapshots(self, path) -> None:
        """CSV with columns t, x, u for every snapshot that stored its field."""
        x = self.grid.x
        with Path(path).open("w") as fh:
            fh.write("t,x,u\n")
            for snap in self.snapshots:
                if snap.u is None:
                    continue
                for xi, ui in zip(x, snap.u):
                    fh.write(f"{snap.t!r},{xi!r},{ui!r}\n")


Observer = Callable[[float, np.ndarray, RunRecord], "bool | None"]


def run(
    u0: Field,
    t_end: float,
    params: PotentialParams,
    config: SolverConfig = SolverConfig(),
    observers: Sequence[Observer] = (),
    schedule: Iterable[float] | None = None,
    band: tuple[float, float] = DEFAULT_BAND,
    keep_fields: bool = False,
    max_steps: int | None = None,
) -> RunRecord:
    """Integrate from u0 to t_end.

    Observers are called as ``obs(t, u, record)`` at t = 0 and at each schedule
    time; a truthy return stops the run (``record.aborted``).
    """
    from .layers import interfaces_of_field

    if not t_end >= 0:
        raise ValidationError(f"t_end must be nonnegative, got {t_end}")
    grid = u0.grid
    u = u0.u.copy()
    delta = config.delta(params.p)
    rec = RunRecord(params, grid, discrete_energy(u, grid, params, delta))
    obs_times = list(observation_times(t_end) if schedule is None else sorted(float(s) for s in schedule))

    def observe(t, E):
        pos = interfaces_of_field(Field(grid, u), band).positions
        rec.snapshots.append(Snapshot(t, E, pos, u.copy() if keep_fields else None))
        stop = False
        for obs in observers:
            stop = bool(obs(t, u, rec)) or stop
        return stop

    if observe(0.0, rec.E0):
        rec.aborted = True
    t, dt, E = 0.0, config.dt_init, rec.E0
    streak, nsteps = 0, 0
    oi = 0
    while oi < len(obs_times) and obs_times[oi] <= 0:
        oi += 1
    while not rec.aborted and t < t_end * (1 - 1e-14):
        target = obs_times[oi] if oi < len(obs_times) else t_end
        dt_cap = dt
        if config.scheme == "explicit":
            dt_cap = min(dt_cap, max(explicit_dt_bound(u, grid, params, config), config.dt_min))
        dt_try = min(dt_cap, target - t)
        hit = dt_try >= target - t
        try:
            u, res = step(u, dt_try, grid, params, config)
        except DtUnderflowError:
            rec.final = u.copy()
            raise
        if not np.all(np.isfinite(u)):
            raise NumericalError("non-finite state after accepted step")
        t = target if hit and res.rejections == 0 else t + res.dt_used
        E = res.energy_after
        rec.step_t.append(t)
        rec.step_dt.append(res.dt_used)
        rec.step_E.append(E)
        rec.step_ut2.append(res.ut_norm_sq)
        rec.rejections += res.rejections
        nsteps += 1
        if res.rejections:
            dt = max(res.dt_used, config.dt_min)
            streak = 0
        else:
            streak += 1
            if streak >= config.grow_after:
                dt = min(dt * config.grow_factor, config.dt_max)
                streak = 0
        if oi < len(obs_times) and t >= obs_times[oi] * (1 - 1e-14):
            while oi < len(obs_times) and obs_times[oi] <= t * (1 + 1e-14):
                oi += 1
            if observe(t, E):
                rec.aborted = True
        if max_steps is not None and nsteps >= max_steps:
            log.warning("stopping after max_steps=%d at t=%g", max_steps, t)
            break
    rec.final = u.copy()
    return rec


# ------------------------------------------------------------- stationary problems


def rhs_jacobian_banded(u, grid, params, config=SolverConfig()):
    """Tridiagonal Jacobian of ``rhs`` in solve_banded (1, 1) layout."""
    p, h, eps = params.p, grid.h, params.eps
    delta = config.delta(p)
    g = np.diff(u) / h
    if p == 2.0:
        dphi = np.ones_like(g)
    elif delta == 0.0:
        dphi = (p - 1.0) * np.abs(g) ** (p - 2.0)
    else:
        dphi = (g * g + delta * delta) ** ((p - 4.0) / 2.0) * ((p - 1.0) * g * g + delta * delta)
    c = eps**p * dphi / h
    inv_w = 1.0 / grid.weights
    m = len(u)
    ab = np.zeros((3, m))
    ab[0, 1:] = c * inv_w[:-1]
    ab[2, :-1] = c * inv_w[1:]
    diag = -eval_ddF(params, u)
    diag[:-1] -= c * inv_w[:-1]
    diag[1:] -= c * inv_w[1:]
    ab[1] = diag
    return ab


def solve_stationary(u_guess: Field, params: PotentialParams, config: SolverConfig = SolverConfig(),
                     tol: float = 1e-13, max_iter: int = 50) -> Field:
    """Damped Newton iteration for the discrete steady state nearest to u_guess."""
    grid = u_guess.grid
    u = u_guess.u.copy()
    r = rhs(u, grid, params, config)
    for _ in range(max_iter):
        rn = float(np.max(np.abs(r)))
        if rn <= tol:
            return Field(grid, u)
        du = solve_banded((1, 1), rhs_jacobian_banded(u, grid, params, config), -r)
        lam = 1.0
        while lam > 1e-6:
            trial = u + lam * du
            r_trial = rhs(trial, grid, params, config)
            if np.max(np.abs(r_trial)) < rn:
                break
            lam *= 0.5
        else:
            break
        u, r = trial, r_trial
    if float(np.max(np.abs(r))) > max(tol, 1e-10):
        raise NumericalError(f"stationary Newton iteration stalled at residual {np.max(np.abs(r)):.3e}")
    return Field(grid, u)
