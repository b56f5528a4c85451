"""Run and sweep configurations, the scenario registry, and result emission."""
from __future__ import annotations

import dataclasses
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from .diagnostics import (
    CollapseEvent,
    EnergyReport,
    FitResult,
    admissible_A_limit,
    detect_collapse,
    dissipation_budget,
    first_collapse_time,
    lower_bound_check,
    scaling_fit,
)
from .errors import InsufficientSamplesError, SlowLayersError, ValidationError
from .grid import Field, Grid
from .layers import (
    DEFAULT_BAND,
    StepFunction,
    build_layer_datum,
    build_stationary_periodic,
    build_stationary_subcritical,
    equidistant_zeros,
)
from .potential import PotentialParams, Regime
from .solver import RunRecord, SolverConfig, observation_times, run

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
LAYOUTS = ("layers", "stationary-subcritical", "stationary-periodic")
STOPS = ("first-collapse", "t_end")
AXES = ("eps", "p", "n")


@dataclass(frozen=True)
class RunConfig:
    p: float
    n: float
    eps: float
    domain: tuple[float, float] = (-4.0, 4.0)
    layout: str = "layers"
    jumps: tuple[float, ...] = ()
    first_sign: int = -1
    N: int | None = None  # zero count for stationary-periodic
    cells_per_eps: int = 8
    solver: SolverConfig = SolverConfig()
    t_end: float = 1e4
    stop: str = "t_end"
    per_decade: int = 64
    t_first: float = 1e-2
    band: tuple[float, float] = DEFAULT_BAND
    output_dir: str | None = None
    keep_fields: bool = False
    name: str = "run"
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        object.__setattr__(self, "domain", tuple(float(x) for x in self.domain))
        object.__setattr__(self, "jumps", tuple(float(x) for x in self.jumps))
        object.__setattr__(self, "band", tuple(float(x) for x in self.band))

    # validation with field-level messages
    def validate(self) -> None:
        errs = []
        if self.schema_version != SCHEMA_VERSION:
            errs.append(f"schema_version: expected {SCHEMA_VERSION}, got {self.schema_version}")
        try:
            params = self.params
        except ValidationError as exc:
            errs.append(f"p/n/eps: {exc}")
            params = None
        if len(self.domain) != 2 or not self.domain[1] > self.domain[0]:
            errs.append(f"domain: need a < b, got {self.domain}")
        if self.layout not in LAYOUTS:
            errs.append(f"layout: must be one of {LAYOUTS}, got {self.layout!r}")
        if self.stop not in STOPS:
            errs.append(f"stop: must be one of {STOPS}, got {self.stop!r}")
        if not self.t_end >= 0:
            errs.append(f"t_end: must be nonnegative, got {self.t_end}")
        if self.cells_per_eps < 1:
            errs.append(f"cells_per_eps: must be at least 1, got {self.cells_per_eps}")
        if self.per_decade < 1 or not self.t_first > 0:
            errs.append("per_decade/t_first: need per_decade >= 1 and t_first > 0")
        if len(self.band) != 2 or self.band[0] > self.band[1] or self.band[0] <= -1 or self.band[1] >= 1:
            errs.append(f"band: need a closed interval inside (-1, 1), got {self.band}")
        if self.layout == "stationary-periodic":
            if self.N is None or self.N < 1:
                errs.append(f"N: stationary-periodic needs N >= 1, got {self.N}")
            if params is not None and params.regime is Regime.SUBCRITICAL:
                errs.append("layout: stationary-periodic needs n >= p")
        elif len(self.domain) == 2 and self.domain[1] > self.domain[0]:
            try:
                StepFunction(self.domain[0], self.domain[1], self.jumps, self.first_sign)
            except ValidationError as exc:
                errs.append(f"jumps: {exc}")
            if self.layout == "stationary-subcritical" and params is not None and params.regime is not Regime.SUBCRITICAL:
                errs.append("layout: stationary-subcritical needs n < p")
        if errs:
            raise ValidationError("invalid run config: " + "; ".join(errs))

    @property
    def params(self) -> PotentialParams:
        return PotentialParams(self.p, self.n, self.eps)

    @property
    def grid(self) -> Grid:
        return Grid.resolving(self.domain[0], self.domain[1], self.eps, self.cells_per_eps)

    def step_function(self) -> StepFunction:
        a, b = self.domain
        if self.layout == "stationary-periodic":
            # zeros alternate starting from an upward crossing
            return StepFunction(a, b, tuple(equidistant_zeros(self.N, a, b)), self.first_sign)
        return StepFunction(a, b, self.jumps, self.first_sign)

    def schedule(self) -> np.ndarray:
        return observation_times(self.t_end, self.per_decade, self.t_first)

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["domain"] = list(self.domain)
        d["jumps"] = list(self.jumps)
        d["band"] = list(self.band)
        return d


_RUN_KEYS = {f.name for f in dataclasses.fields(RunConfig)}
_SOLVER_KEYS = {f.name for f in dataclasses.fields(SolverConfig)}


def run_config_from_mapping(d: Mapping[str, Any]) -> RunConfig:
    d = dict(d)
    unknown = set(d) - _RUN_KEYS
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    solver = d.pop("solver", None) or {}
    if isinstance(solver, Mapping):
        bad = set(solver) - _SOLVER_KEYS
        if bad:
            raise ValidationError(f"unknown solver keys: {sorted(bad)}")
        solver = SolverConfig(**solver)
    for key in ("p", "n", "eps"):
        if key not in d:
            raise ValidationError(f"{key}: missing")
    for key in ("p", "n", "eps", "t_end", "t_first"):
        if key in d:
            d[key] = float(d[key])
    try:
        return RunConfig(solver=solver, **d)
    except TypeError as exc:
        raise ValidationError(str(exc)) from None


def apply_overrides(config: RunConfig, overrides: Mapping[str, Any]) -> RunConfig:
    """Replace run or solver fields; None values are ignored."""
    run_kw = {k: v for k, v in overrides.items() if v is not None and k in _RUN_KEYS}
    solver_kw = {k: v for k, v in overrides.items() if v is not None and k in _SOLVER_KEYS and k not in _RUN_KEYS}
    if solver_kw:
        run_kw["solver"] = dataclasses.replace(config.solver, **solver_kw)
    return config.replace(**run_kw)


def load_run_config(path, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Read a YAML run config; non-None ``overrides`` replace file values."""
    with Path(path).open() as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, Mapping):
        raise ValidationError(f"{path}: top level must be a mapping")
    if "sweep" in data:
        raise ValidationError(f"{path} is a sweep config")
    return apply_overrides(run_config_from_mapping(data), overrides or {})


# ------------------------------------------------------------------- scenarios


@dataclass
class ScenarioResult:
    config: RunConfig
    record: RunRecord
    events: list[CollapseEvent]
    report: EnergyReport | None
    u0: Field

    @property
    def t_collapse(self) -> float | None:
        return first_collapse_time(self.events)

    def summary(self) -> dict:
        rec = self.record
        return {
            "name": self.config.name,
            "p": self.config.p,
            "n": self.config.n,
            "eps": self.config.eps,
            "regime": self.config.params.regime.value,
            "t_final": rec.t_final,
            "E0": rec.E0,
            "E_final": rec.E_final,
            "dissipation_budget": dissipation_budget(rec),
            "steps": len(rec.step_t),
            "rejections": rec.rejections,
            "aborted": rec.aborted,
            "t_collapse": self.t_collapse,
            "sup_drift": float(np.max(np.abs(rec.final - self.u0.u))) if rec.final is not None else None,
        }


def build_initial_field(config: RunConfig) -> Field:
    params, grid = config.params, config.grid
    if config.layout == "stationary-periodic":
        return build_stationary_periodic(config.N, params, config.domain, grid, config.first_sign)
    v = config.step_function()
    if config.layout == "stationary-subcritical":
        return build_stationary_subcritical(v, params, grid)
    return build_layer_datum(v, params, grid)


def _energy_report(u0: Field, v: StepFunction, params: PotentialParams) -> EnergyReport | None:
    if v.N == 0:
        return None
    return lower_bound_check(u0, v, params, 0.5 * admissible_A_limit(v, params))


def run_scenario(config: RunConfig, write: bool = True) -> ScenarioResult:
    """Construct the datum, simulate, detect collapse, and write the artifacts."""
    config.validate()
    params = config.params
    u0 = build_initial_field(config)
    v = config.step_function()
    observers = []
    if config.stop == "first-collapse" and v.N > 0:
        observers.append(lambda t, u, rec: rec.snapshots[-1].count < rec.snapshots[0].count)
    record = run(u0, config.t_end, params, config.solver, observers, config.schedule(), config.band,
                 keep_fields=config.keep_fields)
    events = detect_collapse(record, v, config.band) if v.N > 0 else []
    record.events = events
    result = ScenarioResult(config, record, events, _energy_report(u0, v, params), u0)
    if write and config.output_dir:
        write_scenario(result, Path(config.output_dir))
    return result


def write_scenario(result: ScenarioResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    rec = result.record
    rec.write_log(out / "run_log.jsonl")
    if result.config.keep_fields:
        rec.write_snapshots(out / "snapshots.csv")
    result.u0.to_csv(out / "initial.csv")
    if rec.final is not None:
        Field(rec.grid, rec.final).to_csv(out / "final.csv")
    _dump_json(out / "events.json", [e.to_dict() for e in result.events])
    if result.report is not None:
        _dump_json(out / "energy_report.json", dataclasses.asdict(result.report))
    _dump_json(out / "summary.json", result.summary())
    _dump_json(out / "config.json", result.config.to_dict())


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


FIGURE_JUMPS = (-3.4, -2.0, -0.5, 0.8, 2.2, 3.2)
DESK_JUMPS = (-0.5, 0.4)


@dataclass(frozen=True)
class Scenario:
    config: RunConfig
    description: str
    reference_t: float | None = None  # reference first-collapse time
    long: bool = False


# the dissipation test still bounds the local error; only the step cap is lifted
LONG_SOLVER = SolverConfig(dt_max=1e8)


def _figure(name, p, n, t_end, **kw) -> RunConfig:
    return RunConfig(p=p, n=n, eps=0.1, domain=(-4.0, 4.0), jumps=FIGURE_JUMPS, t_end=t_end,
                     stop="first-collapse", name=name, **kw)


SCENARIOS: dict[str, Scenario] = {
    "fig-critical": Scenario(_figure("fig-critical", 2.0, 2.0, 1e7),
                             "p=n=2, six layers, first collapse", 3e4),
    "fig-critical-p4": Scenario(_figure("fig-critical-p4", 4.0, 4.0, 1e11, solver=LONG_SOLVER),
                                "p=n=4, six layers, first collapse", 7e8, long=True),
    "fig-degenerate": Scenario(_figure("fig-degenerate", 2.0, 4.0, 1e7),
                               "p=2, n=4, six layers, first collapse", 800.0),
    "fig-degenerate-p3": Scenario(_figure("fig-degenerate-p3", 3.0, 4.0, 1e9),
                                  "p=3, n=4, six layers, first collapse"),
    "fig-pi": Scenario(_figure("fig-pi", math.pi, 8.0, 1e9),
                       "p=pi, n=8, six layers, first collapse", 2e4),
    "fig-real-exponent": Scenario(_figure("fig-real-exponent", 5.5, 8.0, 1e12, solver=LONG_SOLVER),
                                  "p=5.5, n=8, six layers, first collapse", 5e9, long=True),
    "desk-critical": Scenario(RunConfig(p=2.0, n=2.0, eps=0.1, domain=(-1.0, 1.0), jumps=DESK_JUMPS,
                                        t_end=1e9, stop="first-collapse", name="desk-critical"),
                              "p=n=2, two layers on [-1, 1]"),
    "desk-degenerate": Scenario(RunConfig(p=2.0, n=4.0, eps=0.1, domain=(-1.0, 1.0), jumps=DESK_JUMPS,
                                          t_end=1e9, stop="first-collapse", name="desk-degenerate"),
                                "p=2, n=4, two layers on [-1, 1]"),
    "compacton-stationary": Scenario(RunConfig(p=4.0, n=2.0, eps=0.05, domain=(-3.0, 3.0), jumps=(-1.0, 1.0),
                                               layout="stationary-subcritical", t_end=1e4,
                                               name="compacton-stationary"),
                                     "p=4, n=2, glued compactons, held for t=1e4"),
}


def get_scenario(name: str) -> Scenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise ValidationError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}") from None


def reproduce(name: str, allow_long: bool = False, output_dir: str | None = None,
              **overrides) -> tuple[ScenarioResult, dict]:
    """Run a registered scenario; the verdict compares first collapse with the reference time to a factor 10."""
    sc = get_scenario(name)
    if sc.long and not allow_long:
        raise ValidationError(f"scenario {name!r} is long-running; pass --allow-long")
    cfg = apply_overrides(sc.config, {**overrides, "output_dir": output_dir})
    res = run_scenario(cfg)
    t = res.t_collapse
    verdict = {"scenario": name, "t_collapse": t, "reference_t": sc.reference_t, "within_factor_10": None}
    if sc.reference_t is not None and t is not None:
        verdict["within_factor_10"] = bool(abs(math.log10(t / sc.reference_t)) <= 1.0)
    if output_dir:
        _dump_json(Path(output_dir) / "verdict.json", verdict)
    return res, verdict


# ---------------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepConfig:
    base: RunConfig
    axis: str
    values: tuple[float, ...]
    stop: str = "first-collapse"
    workers: int = 1
    output_dir: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(x) for x in self.values))

    def validate(self) -> None:
        errs = []
        if self.axis not in AXES:
            errs.append(f"axis: must be one of {AXES}, got {self.axis!r}")
        if not self.values:
            errs.append("values: must be nonempty")
        elif list(self.values) != sorted(self.values) or len(set(self.values)) != len(self.values):
            errs.append(f"values: must be strictly increasing, got {list(self.values)}")
        if self.stop not in STOPS:
            errs.append(f"stop: must be one of {STOPS}, got {self.stop!r}")
        if self.workers < 1:
            errs.append(f"workers: must be at least 1, got {self.workers}")
        if errs:
            raise ValidationError("invalid sweep config: " + "; ".join(errs))
        self.base.validate()

    def member(self, value: float) -> RunConfig:
        return self.base.replace(**{self.axis: value}, stop=self.stop, output_dir=None,
                                 name=f"{self.base.name}-{self.axis}={value:g}")


def load_sweep_config(path, overrides: Mapping[str, Any] | None = None) -> SweepConfig:
    with Path(path).open() as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, Mapping) or "sweep" not in data:
        raise ValidationError(f"{path}: a sweep config needs a 'sweep' section")
    data = dict(data)
    sw = dict(data.pop("sweep"))
    base = run_config_from_mapping(data)
    known = {"axis", "values", "stop", "workers", "output_dir"}
    if set(sw) - known:
        raise ValidationError(f"unknown sweep keys: {sorted(set(sw) - known)}")
    for k, v in (overrides or {}).items():
        if v is not None:
            sw[k] = v
    if "axis" not in sw or "values" not in sw:
        raise ValidationError("sweep: needs axis and values")
    return SweepConfig(base, **sw)


@dataclass
class SweepRow:
    value: float
    t_collapse: float | None
    status: str  # "ok", "no-collapse" or an error message


@dataclass
class SweepResult:
    config: SweepConfig
    rows: list[SweepRow]
    fit: FitResult | None
    fit_error: str | None = None
    failed: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "axis": self.config.axis,
            "rows": [dataclasses.asdict(r) for r in self.rows],
            "fit": self.fit.to_dict() if self.fit else None,
            "fit_error": self.fit_error,
            "failed": self.failed,
        }


def _sweep_member(cfg: RunConfig) -> tuple[float | None, str]:
    try:
        res = run_scenario(cfg, write=False)
    except SlowLayersError as exc:
        return None, f"{type(exc).__name__}: {exc}"
    t = res.t_collapse
    return t, "ok" if t is not None else "no-collapse"


def run_sweep(config: SweepConfig) -> SweepResult:
    """Independent runs along one axis; rows come back in axis order whatever the worker count."""
    config.validate()
    members = [config.member(v) for v in config.values]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outs = list(pool.map(_sweep_member, members))
    else:
        outs = [_sweep_member(m) for m in members]
    rows = [SweepRow(v, t, s) for v, (t, s) in zip(config.values, outs)]
    failed = [r.value for r in rows if r.status not in ("ok", "no-collapse")]
    fit, fit_error = None, None
    if config.axis == "eps":
        samples = [(r.value, r.t_collapse) for r in rows if r.t_collapse is not None]
        regime = config.base.params.regime
        try:
            fit = scaling_fit(samples, regime)
        except InsufficientSamplesError as exc:
            fit_error = f"insufficient-samples: {exc}"
        except ValidationError as exc:
            fit_error = str(exc)
    else:
        fit_error = "fit only defined along the eps axis"
    result = SweepResult(config, rows, fit, fit_error, failed)
    if config.output_dir:
        write_sweep(result, Path(config.output_dir))
    return result


def write_sweep(result: SweepResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with (out / "sweep.csv").open("w") as fh:
        fh.write(f"{result.config.axis},t_collapse,status\n")
        for r in result.rows:
            t = "" if r.t_collapse is None else repr(r.t_collapse)
            fh.write(f"{r.value!r},{t},{json.dumps(r.status)}\n")
    if result.fit is not None:
        result.fit.to_csv(out / "fit.csv")
    _dump_json(out / "sweep.json", result.to_dict())
