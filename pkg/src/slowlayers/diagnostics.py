"""Energy reports, dissipation budgets, collapse detection and slow-motion scaling fits."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EmptySetError, InadmissibleAError, InsufficientSamplesError, ValidationError, WrongRegimeError
from .grid import Field
from .layers import DEFAULT_BAND, StepFunction, hausdorff_distance, max_separation_radius
from .potential import PotentialParams, Regime, constants, lambda_p, transition_energy
from .solver import RunRecord, discrete_energy


def energy(u: Field, params: PotentialParams, delta: float = 0.0) -> float:
    """Discrete renormalised energy, the same functional the solver's step test monitors."""
    return discrete_energy(u.u, u.grid, params, delta)


@dataclass(frozen=True)
class EnergyReport:
    E: float
    N_cp: float
    gap: float
    bound_exp: float
    bound_alg: float
    A: float
    m: int
    # the envelopes are shapes with unit constants, usable only for trends
    unit_constants: bool = True

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def admissible_A_limit(v: StepFunction, params: PotentialParams) -> float:
    return max_separation_radius(v) * math.sqrt(2.0) * lambda_p(params.p)


def lower_bound_check(u: Field | float, v: StepFunction, params: PotentialParams, A: float,
                      m: int = 1) -> EnergyReport:
    """Compare E[u] with N c_p and with the envelopes exp(-Ap/2eps) and eps^{k_{m+1}}.

    ``u`` may be a field or an already computed energy value.
    """
    limit = admissible_A_limit(v, params)
    if not 0.0 < A < limit:
        raise InadmissibleAError(f"A={A:g} must lie in (0, {limit:.6g})")
    E = energy(u, params) if isinstance(u, Field) else float(u)
    N_cp = v.N * transition_energy(params)
    eps = params.eps
    k_next = constants(params).k(m + 1)
    return EnergyReport(
        E=E,
        N_cp=N_cp,
        gap=N_cp - E,
        bound_exp=math.exp(-A * params.p / (2.0 * eps)),
        bound_alg=eps**k_next,
        A=A,
        m=m,
    )


def dissipation_budget(record: RunRecord) -> float:
    """int_0^T ||u_t||^2 dt accumulated over the accepted steps."""
    return float(np.dot(record.step_dt, record.step_ut2)) if record.step_dt else 0.0


def dissipation_defect(record: RunRecord) -> float:
    """Relative mismatch between the budget and eps (E(0) - E(T))."""
    eps = record.params.eps
    drop = record.E0 - record.E_final
    return abs(dissipation_budget(record) - eps * drop) / max(eps * abs(drop), 1e-300)


@dataclass(frozen=True)
class CollapseEvent:
    t_collapse: float
    N_before: int
    N_after: int
    surviving_positions: tuple[float, ...]
    kind: str = "count-drop"  # or "displacement"
    t_bracket: tuple[float, float] = (0.0, 0.0)
    distance: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["surviving_positions"] = list(self.surviving_positions)
        d["t_bracket"] = list(self.t_bracket)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _bracket_time(t0: float, t1: float) -> float:
    return math.sqrt(t0 * t1) if t0 > 0 else t1


def detect_collapse(record: RunRecord, v: StepFunction, K: tuple[float, float] = DEFAULT_BAND,
                    delta: float | None = None) -> list[CollapseEvent]:
    """Count drops of the tracked interface set, plus the first exit from the delta-neighbourhood of I[v].

    ``K`` is recorded for bookkeeping only; the positions themselves come from
    the snapshots, which the solver builds with the band it was given.
    """
    r = max_separation_radius(v)
    delta = r / 2.0 if delta is None else float(delta)
    if not 0.0 < delta < r:
        raise ValidationError(f"delta={delta:g} must lie in (0, {r:g})")
    if v.N == 0:
        return []
    jumps = np.asarray(v.jumps)
    events: list[CollapseEvent] = []
    snaps = record.snapshots
    displaced = False
    for prev, cur in zip(snaps, snaps[1:]):
        t = _bracket_time(prev.t, cur.t)
        if cur.count < prev.count:
            events.append(CollapseEvent(t, prev.count, cur.count, tuple(float(x) for x in cur.positions),
                                        "count-drop", (prev.t, cur.t)))
        if not displaced:
            try:
                d = hausdorff_distance(cur.positions, jumps)
            except EmptySetError:
                d = math.inf
            if d > delta:
                displaced = True
                events.append(CollapseEvent(t, prev.count, cur.count, tuple(float(x) for x in cur.positions),
                                            "displacement", (prev.t, cur.t), d))
    return events


def first_collapse_time(events: Sequence[CollapseEvent]) -> float | None:
    ts = [e.t_collapse for e in events if e.kind == "count-drop"]
    return min(ts) if ts else None


@dataclass(frozen=True)
class FitResult:
    regime: Regime
    slope: float
    intercept: float
    r2: float
    eps: tuple[float, ...]
    t: tuple[float, ...]
    residuals: tuple[float, ...]
    # exponent the theory compares against: A p / 2 at the admissible supremum, or gamma
    reference: float | None = None

    def abscissa(self) -> np.ndarray:
        return _abscissa(np.asarray(self.eps), self.regime)

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eps", "t", "residual"])
            w.writerows(zip(self.eps, self.t, self.residuals))

    def to_dict(self) -> dict:
        return {
            "regime": self.regime.value,
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r2,
            "reference": self.reference,
            "eps": list(self.eps),
            "t": list(self.t),
        }


def _abscissa(eps: np.ndarray, regime: Regime) -> np.ndarray:
    if regime is Regime.CRITICAL:
        return 1.0 / eps
    if regime is Regime.SUPERCRITICAL:
        return np.log(1.0 / eps)
    raise WrongRegimeError("no slow motion to fit when n < p")


def scaling_fit(samples: Sequence[tuple[float, float]], regime: Regime,
                reference: float | None = None) -> FitResult:
    """Least squares of log t against 1/eps (critical) or log(1/eps) (supercritical)."""
    if len(samples) < 3:
        raise InsufficientSamplesError(f"scaling fit needs at least 3 samples, got {len(samples)}")
    eps = np.array([s[0] for s in samples], dtype=float)
    t = np.array([s[1] for s in samples], dtype=float)
    if np.any(eps <= 0) or np.any(t <= 0):
        raise ValidationError("eps and t must be positive")
    if len(np.unique(eps)) != len(eps):
        raise ValidationError("scaling fit needs distinct eps values")
    x = _abscissa(eps, regime)
    y = np.log(t)
    slope, intercept = np.polyfit(x, y, 1)
    res = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(res**2)) / ss_tot if ss_tot > 0 else 1.0
    return FitResult(regime, float(slope), float(intercept), r2, tuple(eps.tolist()), tuple(t.tolist()),
                     tuple(res.tolist()), reference)
